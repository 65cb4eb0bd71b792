// Command-line front end: scenario simulation, tracking runs, metric
// evaluation, the ablation table and the fusion-block invariant suite.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "jptrack/config.hpp"
#include "jptrack/experiment.hpp"
#include "jptrack/metrics.hpp"
#include "jptrack/mot_io.hpp"
#include "jptrack/sim.hpp"
#include "jptrack/stff.hpp"

namespace fs = std::filesystem;
using namespace jptrack;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitValidation = 4;

RunConfig load_run_config(const std::string& config_path, const std::string& det_dir) {
    RunConfig rc;
    if (!det_dir.empty()) {
        const fs::path manifest = fs::path(det_dir) / "manifest.cfg";
        if (fs::exists(manifest)) rc = parse_config_file(manifest.string());
    }
    if (!config_path.empty()) rc = parse_config_file(config_path, rc);
    validate(rc);
    return rc;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir) {
    RunConfig rc;
    if (!config_path.empty()) rc = parse_config_file(config_path);
    validate(rc);

    fs::create_directories(out_dir);
    const auto gt = sim::gen_scenario(rc.scenario);
    const auto dets = sim::render_detections(gt, rc.noise, rc.scenario.frame_w,
                                             rc.scenario.frame_h, rc.scenario.seed);

    io::write_mot_file((fs::path(out_dir) / "gt.txt").string(), io::from_trajectories(gt));
    io::write_mot_file((fs::path(out_dir) / "det_global.txt").string(), io::from_detections(dets));
    write_config_file((fs::path(out_dir) / "manifest.cfg").string(), rc);

    long n_dets = 0;
    for (const auto& [f, v] : dets) n_dets += static_cast<long>(v.size());
    std::cout << "simulated " << rc.scenario.frames << " frames, " << rc.scenario.n_targets
              << " targets, " << n_dets << " global detections -> " << out_dir << "\n";
    return kExitOk;
}

int cmd_track(const std::string& config_path, const std::string& det_dir,
              const std::string& out_path, bool baseline, bool no_pmr, bool no_ld) {
    const RunConfig rc = load_run_config(config_path, det_dir);

    const fs::path det_file = fs::path(det_dir) / "det_global.txt";
    if (!fs::exists(det_file)) throw IoError("missing detection file: " + det_file.string());
    const auto det_global = io::to_detections(io::parse_mot_file(det_file.string()));

    metrics::TrajectorySet gt;
    const fs::path gt_file = fs::path(det_dir) / "gt.txt";
    const bool use_ld = !no_ld;
    if (fs::exists(gt_file))
        gt = io::to_trajectories(io::parse_mot_file(gt_file.string()));
    else if (use_ld)
        throw IoError("local-detection mode needs " + gt_file.string() +
                      " for the ROI detector oracle (or pass --no-ld)");

    RunOptions opt;
    opt.baseline = baseline;
    opt.use_pmr = !no_pmr && !baseline;
    opt.use_ld = use_ld;

    const RunOutput run = run_tracking(gt, det_global, rc, opt);
    io::write_mot_file(out_path, io::from_trajectories(run.predictions));

    int ld_frames = 0;
    for (Mode m : run.mode_trace)
        if (m == Mode::LD) ++ld_frames;
    std::printf("tracked %d frames (%d local-mode) at %.0f steps/s -> %s\n", run.frames, ld_frames,
                run.steps_per_sec, out_path.c_str());
    return kExitOk;
}

int cmd_eval(const std::string& gt_path, const std::string& res_path, bool motp_distance) {
    const auto gt = io::to_trajectories(io::parse_mot_file(gt_path));
    const auto res = io::to_trajectories(io::parse_mot_file(res_path));
    if (gt.empty()) throw std::invalid_argument("eval: ground truth has no boxes");
    const auto r = metrics::evaluate(gt, res);
    const double motp = motp_distance ? 1.0 - r.motp : r.motp;

    std::printf("%-6s %8s %8s %8s %8s %8s %8s\n", "IDSW", "IDF1", "MOTA", "MOTP", "HOTA", "DetA",
                "AssA");
    std::printf("%-6ld %8.2f %8.2f %8.2f %8.2f %8.2f %8.2f\n", r.idsw, 100.0 * r.idf1,
                100.0 * r.mota, 100.0 * motp, 100.0 * r.hota, 100.0 * r.deta, 100.0 * r.assa);
    std::printf("idsw = %ld\n", r.idsw);
    std::printf("idf1 = %.6f\n", 100.0 * r.idf1);
    std::printf("idp = %.6f\n", 100.0 * r.idp);
    std::printf("idr = %.6f\n", 100.0 * r.idr);
    std::printf("mota = %.6f\n", 100.0 * r.mota);
    std::printf("motp = %.6f\n", 100.0 * motp);
    std::printf("hota = %.6f\n", 100.0 * r.hota);
    std::printf("deta = %.6f\n", 100.0 * r.deta);
    std::printf("assa = %.6f\n", 100.0 * r.assa);
    std::printf("fp = %ld\nfn = %ld\ntp = %ld\n", r.fp, r.fn, r.tp);
    return kExitOk;
}

int cmd_ablate(const std::string& suite_name, int seeds, std::uint64_t base_seed,
               const std::string& config_path) {
    RunConfig rc;
    if (!config_path.empty()) rc = parse_config_file(config_path);
    validate(rc);

    const auto suite = make_suite(suite_name, seeds, base_seed);
    std::printf("suite '%s', %d scenarios (3 targets, 600 frames each)\n", suite_name.c_str(),
                seeds);
    std::printf("%-18s %6s %8s %8s %8s %8s\n", "configuration", "IDSW", "IDF1", "MOTA", "MOTP",
                "HOTA");
    for (const auto& [label, opt] : ablation_rows()) {
        const AblationRow row = run_suite(suite, rc.tracker, label, opt);
        std::printf("%-18s %6ld %8.2f %8.2f %8.2f %8.2f\n", row.label.c_str(), row.idsw,
                    100.0 * row.idf1, 100.0 * row.mota, 100.0 * row.motp, 100.0 * row.hota);
    }
    return kExitOk;
}

int cmd_stff_check(std::uint64_t seed, const std::string& params_out) {
    if (!params_out.empty()) {
        stff::save_params(params_out, stff::StffParams::seeded(8, 4, 2, 4, seed));
        std::printf("wrote seeded parameters to %s\n", params_out.c_str());
    }
    const auto results = stff::run_invariant_checks(seed);
    bool all_pass = true;
    for (const auto& r : results) {
        std::printf("[%s] %s%s%s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                    r.detail.empty() ? "" : " - ", r.detail.c_str());
        all_pass = all_pass && r.pass;
    }
    return all_pass ? kExitOk : kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"global-local multi-object tracking engine"};
    app.require_subcommand(1);

    std::string config_path, out_dir, det_dir, out_path, gt_path, res_path, params_out;
    std::string suite_name = "mixed";
    bool baseline = false, no_pmr = false, no_ld = false, motp_distance = false;
    int seeds = 20;
    std::uint64_t base_seed = 7, stff_seed = 42;

    auto* sim_cmd = app.add_subcommand("simulate", "generate a scenario and detection files");
    sim_cmd->add_option("--config", config_path, "run configuration file");
    sim_cmd->add_option("--out", out_dir, "output directory")->required();

    auto* track_cmd = app.add_subcommand("track", "run the tracker over a simulated scenario");
    track_cmd->add_option("--config", config_path, "run configuration file");
    track_cmd->add_option("--det", det_dir, "directory written by simulate")->required();
    track_cmd->add_option("--out", out_path, "result file (MOT format)")->required();
    track_cmd->add_flag("--baseline", baseline, "IoU-only association, no recovery");
    track_cmd->add_flag("--no-pmr", no_pmr, "disable memory recovery");
    track_cmd->add_flag("--no-ld", no_ld, "disable local-detection scheduling");

    auto* eval_cmd = app.add_subcommand("eval", "score a result file against ground truth");
    eval_cmd->add_option("--gt", gt_path, "ground-truth MOT file")->required();
    eval_cmd->add_option("--res", res_path, "tracker result MOT file")->required();
    eval_cmd->add_flag("--motp-distance", motp_distance,
                       "report MOTP as 1 - IoU instead of mean IoU");

    auto* ablate_cmd = app.add_subcommand("ablate", "run the seeded component comparison");
    ablate_cmd->add_option("--suite", suite_name, "occlusion, crossing or mixed");
    ablate_cmd->add_option("--seeds", seeds, "number of scenarios");
    ablate_cmd->add_option("--base-seed", base_seed, "first scenario seed");
    ablate_cmd->add_option("--config", config_path, "run configuration file");

    auto* stff_cmd = app.add_subcommand("stff-check", "run the fusion-block invariant suite");
    stff_cmd->add_option("--seed", stff_seed, "seed for the randomized checks");
    stff_cmd->add_option("--params-out", params_out, "dump the seeded parameters to a text file");

    try {
        app.parse(argc, argv);
        if (sim_cmd->parsed()) return cmd_simulate(config_path, out_dir);
        if (track_cmd->parsed())
            return cmd_track(config_path, det_dir, out_path, baseline, no_pmr, no_ld);
        if (eval_cmd->parsed()) return cmd_eval(gt_path, res_path, motp_distance);
        if (ablate_cmd->parsed()) return cmd_ablate(suite_name, seeds, base_seed, config_path);
        if (stff_cmd->parsed()) return cmd_stff_check(stff_seed, params_out);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const io::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitOk;
}
