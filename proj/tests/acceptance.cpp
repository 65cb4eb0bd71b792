// Acceptance suite: one test case per criterion, each printing a pass/fail
// line. Expected values come from independent straight-line oracles living
// in this file, never from the library code under test.

#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "jptrack/experiment.hpp"
#include "jptrack/metrics.hpp"
#include "jptrack/mot_io.hpp"
#include "jptrack/pmr.hpp"
#include "jptrack/scheduler.hpp"
#include "jptrack/sim.hpp"
#include "jptrack/stff.hpp"
#include "jptrack/tracker.hpp"

using namespace jptrack;
namespace fs = std::filesystem;

namespace {

struct Criterion {
    int number;
    std::string title;
    bool ok = true;
    std::string note;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            if (!note.empty()) note += "; ";
            note += what;
        }
    }
    ~Criterion() {
        std::printf("criterion %2d [%s] %s%s%s\n", number, ok ? "PASS" : "FAIL", title.c_str(),
                    note.empty() ? "" : " - ", note.c_str());
        std::fflush(stdout);
    }
};

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// straight-line oracle helpers
// ---------------------------------------------------------------------------

double oracle_iou(const BoundingBox& a, const BoundingBox& b) {
    const double x0 = std::max(a.x, b.x);
    const double y0 = std::max(a.y, b.y);
    const double x1 = std::min(a.x + a.w, b.x + b.w);
    const double y1 = std::min(a.y + a.h, b.y + b.h);
    if (x1 <= x0 || y1 <= y0) return 0.0;
    const double inter = (x1 - x0) * (y1 - y0);
    return inter / (a.w * a.h + b.w * b.h - inter);
}

struct OracleScene {
    // one entry per track: predicted box plus observed (frame, center) history
    std::vector<BoundingBox> pred_boxes;
    std::vector<std::vector<std::pair<int, Vec2>>> histories;
    std::vector<Detection> dets;
};

// recomputes one composite-cost entry from raw data
double oracle_jcma_entry(const OracleScene& s, std::size_t ti, std::size_t dj,
                         const TrackerConfig& cfg) {
    const BoundingBox& pb = s.pred_boxes[ti];
    const BoundingBox& db = s.dets[dj].box;
    const double pcx = pb.x + pb.w / 2, pcy = pb.y + pb.h / 2;
    const double dcx = db.x + db.w / 2, dcy = db.y + db.h / 2;

    // geometric terms
    const double c_iou = 1.0 - oracle_iou(pb, db);
    const double scale = (pb.w + pb.h + db.w + db.h) / 4.0 * 2.0;
    const double c_dist = std::min(1.0, std::hypot(pcx - dcx, pcy - dcy) / scale);

    // motion term from the observed history
    const auto& hist = s.histories[ti];
    const bool has_motion = hist.size() >= 2;
    double c_motion = 0.0;
    if (has_motion) {
        std::vector<Vec2> vels;
        for (std::size_t k = 1; k < hist.size(); ++k) {
            const double df = std::max(1, hist[k].first - hist[k - 1].first);
            vels.push_back({(hist[k].second.x - hist[k - 1].second.x) / df,
                            (hist[k].second.y - hist[k - 1].second.y) / df});
        }
        double v_avg = 0.0;
        int used = 0;
        for (auto it = vels.rbegin(); it != vels.rend() && used < 5; ++it, ++used)
            v_avg += std::hypot(it->x, it->y);
        v_avg /= used;

        const Vec2 last_c = hist.back().second;
        const double df = std::max(1, s.dets[dj].frame - hist.back().first);
        const double ux = (dcx - last_c.x) / df, uy = (dcy - last_c.y) / df;
        const double v_expected = std::hypot(ux, uy);
        const double c_speed = std::min(1.0, std::abs(v_expected - v_avg) /
                                                 std::max(50.0, 2.0 + v_avg));

        const Vec2 v_last = vels.back();
        double c_direction = 0.0;
        if (v_expected > 1e-9 && std::hypot(v_last.x, v_last.y) > 1e-9) {
            double dth = std::atan2(uy, ux) - std::atan2(v_last.y, v_last.x);
            while (dth > std::numbers::pi) dth -= 2 * std::numbers::pi;
            while (dth < -std::numbers::pi) dth += 2 * std::numbers::pi;
            c_direction = std::min(1.0, std::abs(dth) / (std::numbers::pi / 2));
        }
        const double c_accel =
            std::min(1.0, std::hypot(ux - v_last.x, uy - v_last.y) / 30.0);
        c_motion = cfg.beta_1 * c_speed + cfg.beta_2 * c_direction + cfg.beta_3 * c_accel;
    }

    // constellation term: detection centers plus predicted track centers,
    // track points deduplicated against coincident detections (1 px)
    std::vector<Vec2> others;
    for (std::size_t j = 0; j < s.dets.size(); ++j) {
        if (j == dj) continue;
        others.push_back({s.dets[j].box.x + s.dets[j].box.w / 2,
                          s.dets[j].box.y + s.dets[j].box.h / 2});
    }
    for (std::size_t i = 0; i < s.pred_boxes.size(); ++i) {
        if (i == ti) continue;
        const double cx = s.pred_boxes[i].x + s.pred_boxes[i].w / 2;
        const double cy = s.pred_boxes[i].y + s.pred_boxes[i].h / 2;
        bool dup = false;
        for (const auto& d : s.dets)
            if (std::hypot(d.box.x + d.box.w / 2 - cx, d.box.y + d.box.h / 2 - cy) < 1.0) {
                dup = true;
                break;
            }
        if (!dup) others.push_back({cx, cy});
    }

    double c_rel = 0.0;
    bool has_rel = !others.empty();
    {
        double sum = 0.0;
        int m = 0;
        for (const Vec2& o : others) {
            const double ax = o.x - pcx, ay = o.y - pcy;
            const double bx = o.x - dcx, by = o.y - dcy;
            const double na = std::hypot(ax, ay), nb = std::hypot(bx, by);
            if (na < 1e-12 || nb < 1e-12) continue;
            sum += (ax * bx + ay * by) / (na * nb);
            ++m;
        }
        if (m > 0)
            c_rel = std::clamp(1.0 - sum / m, 0.0, 1.0);
        else
            has_rel = false;
    }

    double w1 = cfg.omega_1, w2 = cfg.omega_2;
    const double w3 = has_motion ? cfg.omega_3 : 0.0;
    const double w4 = has_rel ? cfg.omega_4 : 0.0;
    const double wsum = w1 + w2 + w3 + w4;
    double cost = w1 * c_iou + w2 * c_dist;
    if (has_motion) cost += w3 * c_motion;
    if (has_rel) cost += w4 * c_rel;
    return cost / wsum;
}

Track scene_track(int id, const std::vector<std::pair<int, Vec2>>& obs, const BoundingBox& pred) {
    Track t;
    t.id = id;
    for (const auto& [f, c] : obs)
        t.push_observation(f, box_from_center(c, pred.w, pred.h), 0.9, 30);
    t.motion = kf_init(t.last_box());
    t.motion.mean(0) = pred.x + pred.w / 2;
    t.motion.mean(1) = pred.y + pred.h / 2;
    t.motion.mean(2) = pred.w;
    t.motion.mean(3) = pred.h;
    t.motion.mean.tail(4).setZero();
    return t;
}

// ---------------------------------------------------------------------------
// metrics oracle for scenes with unambiguous geometry
// ---------------------------------------------------------------------------

using Scene = metrics::TrajectorySet;

struct OracleCounts {
    long tp = 0, fn = 0, fp = 0, idsw = 0;
    double motp = 0.0, mota = 0.0;
    double idf1 = 0.0, idp = 0.0, idr = 0.0;
    double hota = 0.0, deta = 0.0, assa = 0.0;
};

struct MatchedPair {
    int frame, gt_id, pred_id;
    double iou;
};

// forced per-frame matching; REQUIREs the scene is designed unambiguous
std::vector<MatchedPair> oracle_match(const Scene& gt, const Scene& pred, double thr, long& fn,
                                      long& fp, std::vector<std::pair<int, int>>* fn_list = nullptr,
                                      std::vector<std::pair<int, int>>* fp_list = nullptr) {
    std::vector<MatchedPair> pairs;
    fn = fp = 0;
    std::set<int> frames;
    for (const auto& [f, v] : gt.frames) frames.insert(f);
    for (const auto& [f, v] : pred.frames) frames.insert(f);
    for (int f : frames) {
        const auto git = gt.frames.find(f);
        const auto pit = pred.frames.find(f);
        std::vector<std::pair<int, BoundingBox>> gs =
            git == gt.frames.end() ? std::vector<std::pair<int, BoundingBox>>{} : git->second;
        std::vector<std::pair<int, BoundingBox>> ps =
            pit == pred.frames.end() ? std::vector<std::pair<int, BoundingBox>>{} : pit->second;
        std::vector<char> used(ps.size(), 0);
        for (const auto& [gid, gb] : gs) {
            int hit = -1;
            for (std::size_t j = 0; j < ps.size(); ++j) {
                if (oracle_iou(gb, ps[j].second) >= thr) {
                    REQUIRE(hit == -1);  // scene must be unambiguous
                    hit = static_cast<int>(j);
                }
            }
            if (hit >= 0) {
                REQUIRE(!used[hit]);
                used[hit] = 1;
                pairs.push_back({f, gid, ps[hit].first, oracle_iou(gb, ps[hit].second)});
            } else {
                ++fn;
                if (fn_list) fn_list->push_back({f, gid});
            }
        }
        for (std::size_t j = 0; j < ps.size(); ++j)
            if (!used[j]) {
                ++fp;
                if (fp_list) fp_list->push_back({f, ps[j].first});
            }
    }
    return pairs;
}

OracleCounts oracle_metrics(const Scene& gt, const Scene& pred) {
    OracleCounts out;

    // CLEAR family at threshold 0.5
    const auto pairs = oracle_match(gt, pred, 0.5, out.fn, out.fp);
    out.tp = static_cast<long>(pairs.size());
    std::map<int, int> last;
    double iou_sum = 0.0;
    for (const auto& p : pairs) {
        iou_sum += p.iou;
        const auto it = last.find(p.gt_id);
        if (it != last.end() && it->second != p.pred_id) ++out.idsw;
        last[p.gt_id] = p.pred_id;
    }
    out.motp = out.tp > 0 ? iou_sum / out.tp : 0.0;
    out.mota = 1.0 - static_cast<double>(out.fp + out.fn + out.idsw) /
                         static_cast<double>(gt.total_boxes());

    // identity scores by enumerating every injective id mapping
    std::vector<int> gt_ids, pred_ids;
    {
        std::set<int> gset, pset;
        for (const auto& [f, v] : gt.frames)
            for (const auto& [id, b] : v) gset.insert(id);
        for (const auto& [f, v] : pred.frames)
            for (const auto& [id, b] : v) pset.insert(id);
        gt_ids.assign(gset.begin(), gset.end());
        pred_ids.assign(pset.begin(), pset.end());
    }
    std::map<std::pair<int, int>, long> coloc;
    for (const auto& [f, gv] : gt.frames) {
        const auto pit = pred.frames.find(f);
        if (pit == pred.frames.end()) continue;
        for (const auto& [gid, gb] : gv)
            for (const auto& [pid, pb] : pit->second)
                if (oracle_iou(gb, pb) >= 0.5) ++coloc[{gid, pid}];
    }
    long best_idtp = 0;
    std::vector<char> pused(pred_ids.size(), 0);
    auto enumerate = [&](auto&& self, std::size_t gi, long acc) -> void {
        if (gi == gt_ids.size()) {
            best_idtp = std::max(best_idtp, acc);
            return;
        }
        self(self, gi + 1, acc);  // leave this gt id unmapped
        for (std::size_t pj = 0; pj < pred_ids.size(); ++pj) {
            if (pused[pj]) continue;
            pused[pj] = 1;
            const auto it = coloc.find({gt_ids[gi], pred_ids[pj]});
            self(self, gi + 1, acc + (it == coloc.end() ? 0 : it->second));
            pused[pj] = 0;
        }
    };
    enumerate(enumerate, 0, 0);
    const double total_gt = static_cast<double>(gt.total_boxes());
    const double total_pred = static_cast<double>(pred.total_boxes());
    out.idp = total_pred > 0 ? best_idtp / total_pred : 0.0;
    out.idr = total_gt > 0 ? best_idtp / total_gt : 0.0;
    out.idf1 = (out.idp + out.idr) > 0 ? 2 * out.idp * out.idr / (out.idp + out.idr) : 0.0;

    // detection/association decomposition by direct enumeration per alpha
    for (int ai = 1; ai <= 19; ++ai) {
        const double alpha = 0.05 * ai;
        long fn_a = 0, fp_a = 0;
        std::vector<std::pair<int, int>> fns, fps;
        const auto tps = oracle_match(gt, pred, alpha, fn_a, fp_a, &fns, &fps);
        const double denom = static_cast<double>(tps.size()) + fn_a + fp_a;
        if (denom <= 0) continue;
        double acc = 0.0;
        for (const auto& c : tps) {
            long tpa = 0, fna = 0, fpa = 0;
            for (const auto& o : tps) {
                if (o.gt_id == c.gt_id && o.pred_id == c.pred_id) ++tpa;
                if (o.gt_id == c.gt_id && o.pred_id != c.pred_id) ++fna;
                if (o.pred_id == c.pred_id && o.gt_id != c.gt_id) ++fpa;
            }
            for (const auto& o : fns)
                if (o.second == c.gt_id) ++fna;
            for (const auto& o : fps)
                if (o.second == c.pred_id) ++fpa;
            acc += static_cast<double>(tpa) / static_cast<double>(tpa + fna + fpa);
        }
        const double deta_a = static_cast<double>(tps.size()) / denom;
        const double assa_a = tps.empty() ? 0.0 : acc / static_cast<double>(tps.size());
        out.hota += std::sqrt(acc / denom);
        out.deta += deta_a;
        out.assa += assa_a;
    }
    out.hota /= 19.0;
    out.deta /= 19.0;
    out.assa /= 19.0;
    return out;
}

void compare_reports(Criterion& c, const std::string& tag, const Scene& gt, const Scene& pred) {
    const auto lib = metrics::evaluate(gt, pred);
    const auto ora = oracle_metrics(gt, pred);
    c.expect(lib.idsw == ora.idsw, tag + ": idsw");
    c.expect(lib.tp == ora.tp && lib.fn == ora.fn && lib.fp == ora.fp, tag + ": counters");
    c.expect(std::abs(lib.mota - ora.mota) < 1e-12, tag + ": mota");
    c.expect(std::abs(lib.motp - ora.motp) < 1e-12, tag + ": motp");
    c.expect(std::abs(lib.idf1 - ora.idf1) < 1e-12, tag + ": idf1");
    c.expect(std::abs(lib.hota - ora.hota) < 1e-12, tag + ": hota");
    c.expect(std::abs(lib.deta - ora.deta) < 1e-12, tag + ": deta");
    c.expect(std::abs(lib.assa - ora.assa) < 1e-12, tag + ": assa");
}

// ---------------------------------------------------------------------------
// CLI helpers
// ---------------------------------------------------------------------------

struct TempDir {
    fs::path dir;
    explicit TempDir(const std::string& tag) {
        dir = fs::temp_directory_path() / ("jptrack_acc_" + tag + "_" + std::to_string(::getpid()));
        fs::create_directories(dir);
    }
    ~TempDir() { fs::remove_all(dir); }
    std::string path(const std::string& name) const { return (dir / name).string(); }
};

int run_cli(const std::string& args, const std::string& out_file = "/dev/null") {
    const std::string cmd = std::string(JPTRACK_CLI_PATH) + " " + args + " > " + out_file + " 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
}

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

// ---------------------------------------------------------------------------

TEST_CASE("criterion 1: scope statement", "[acceptance]") {
    Criterion c{1,
                "published benchmark figures need the original datasets and trained "
                "detectors; this suite substitutes oracle, invariant and directional checks"};
    c.expect(true, "");
    SUCCEED();
}

TEST_CASE("criterion 2: assignment optimality", "[acceptance]") {
    Criterion c{2, "1000 random matrices up to 7x7 solved to the exact permutation minimum"};
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20250809);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const int r = 1 + static_cast<int>(rng() % 7);
        const int cl = 1 + static_cast<int>(rng() % 7);
        CostMatrix m(r, cl);
        for (auto& v : m.values) v = u(rng);

        const Assignment a = solve_assignment(m, 1e18);
        double total = 0.0;
        for (const auto& [i, j] : a.pairs) total += m.at(i, j);

        // exhaustive enumeration of injective assignments
        double best = std::numeric_limits<double>::infinity();
        std::vector<char> used(std::max(r, cl), 0);
        const int k = std::min(r, cl);
        auto rec = [&](auto&& self, int depth, double acc) -> void {
            if (acc >= best) return;
            if (depth == k) {
                best = acc;
                return;
            }
            if (r <= cl) {
                for (int j = 0; j < cl; ++j)
                    if (!used[j]) {
                        used[j] = 1;
                        self(self, depth + 1, acc + m.at(depth, j));
                        used[j] = 0;
                    }
            } else {
                for (int i = 0; i < r; ++i)
                    if (!used[i]) {
                        used[i] = 1;
                        self(self, depth + 1, acc + m.at(i, depth));
                        used[i] = 0;
                    }
            }
        };
        rec(rec, 0, 0.0);
        c.expect(std::abs(total - best) < 1e-9,
                 "trial " + std::to_string(trial) + " off optimum");
        c.expect(a.pairs.size() == static_cast<std::size_t>(k), "cardinality");
        if (!c.ok) break;
    }
    const double secs = elapsed_s(t0);
    c.expect(secs < 5.0, "runtime " + std::to_string(secs) + "s over budget");
    REQUIRE(c.ok);
}

TEST_CASE("criterion 3: composite-cost arithmetic oracle", "[acceptance]") {
    Criterion c{3, "50 randomized scenes match a straight-line cost recomputation to 1e-9"};
    TrackerConfig cfg;

    // worked example: components 0.5 / 0.25 / 0.5 / 0 weighted 0.3/0.3/0.2/0.2
    {
        const double h = 100.0 / 3.0;
        OracleScene s;
        const BoundingBox pred = box_from_center({500, 500}, 100, h);
        s.pred_boxes.push_back(pred);
        const double m = 65.0, ang = std::numbers::pi / 8.0;
        const Vec2 u{m * std::cos(ang), m * std::sin(ang)};
        const Vec2 det_c{500.0 + 100.0 / 3.0, 500.0};
        const Vec2 last_c = det_c - u;
        s.histories.push_back({{1, last_c - Vec2{40, 0}}, {2, last_c}});
        Detection d0;
        d0.frame = 3;
        d0.box = box_from_center(det_c, 100, h);
        d0.confidence = 0.9;
        Detection d1;
        d1.frame = 3;
        d1.box = box_from_center({700, 500}, 100, h);
        d1.confidence = 0.9;
        s.dets = {d0, d1};

        Track t = scene_track(1, s.histories[0], pred);
        const CostMatrix lib = jcma_cost({&t}, s.dets, cfg);
        c.expect(std::abs(lib.at(0, 0) - 0.325) < 1e-9,
                 "worked example: got " + std::to_string(lib.at(0, 0)));
        c.expect(std::abs(oracle_jcma_entry(s, 0, 0, cfg) - 0.325) < 1e-9,
                 "oracle disagrees with the worked example");
    }

    // saturated example: every component clamps to 1
    {
        OracleScene s;
        const BoundingBox pred = box_from_center({1020, 1000}, 20, 20);
        s.pred_boxes.push_back(pred);
        s.histories.push_back({{1, {1000, 1000}}, {2, {1010, 1000}}});
        Detection d0;
        d0.frame = 3;
        d0.box = box_from_center({810, 800}, 20, 20);
        d0.confidence = 0.9;
        Detection d1;
        d1.frame = 3;
        d1.box = box_from_center({915, 900}, 20, 20);
        d1.confidence = 0.9;
        s.dets = {d0, d1};
        Track t = scene_track(1, s.histories[0], pred);
        const CostMatrix lib = jcma_cost({&t}, s.dets, cfg);
        c.expect(std::abs(lib.at(0, 0) - 1.0) < 1e-12, "saturated example not 1.0");
    }

    std::mt19937_64 rng(424242);
    std::uniform_real_distribution<double> pos(100.0, 1200.0), size(8.0, 80.0), vel(-20.0, 20.0);
    std::uniform_real_distribution<double> jitter(-60.0, 60.0);
    for (int trial = 0; trial < 50; ++trial) {
        OracleScene s;
        const int nt = 1 + static_cast<int>(rng() % 3);
        const int nd = 1 + static_cast<int>(rng() % 4);
        std::vector<Track> tracks;
        for (int i = 0; i < nt; ++i) {
            const int hist_len = 1 + static_cast<int>(rng() % 8);
            std::vector<std::pair<int, Vec2>> obs;
            Vec2 p{pos(rng), pos(rng)};
            const Vec2 v{vel(rng), vel(rng)};
            for (int f = 1; f <= hist_len; ++f) {
                obs.push_back({f, p});
                p = p + v + Vec2{jitter(rng) * 0.05, jitter(rng) * 0.05};
            }
            const BoundingBox pred = box_from_center(p, size(rng), size(rng));
            s.pred_boxes.push_back(pred);
            s.histories.push_back(obs);
            tracks.push_back(scene_track(i + 1, obs, pred));
        }
        for (int j = 0; j < nd; ++j) {
            Detection d;
            d.frame = 9;
            // anchor some detections near tracks, leave others as clutter
            if (j < nt && (rng() % 2))
                d.box = box_from_center(center(s.pred_boxes[j]) + Vec2{jitter(rng), jitter(rng)},
                                        size(rng), size(rng));
            else
                d.box = box_from_center({pos(rng), pos(rng)}, size(rng), size(rng));
            d.confidence = 0.9;
            s.dets.push_back(d);
        }
        // library histories end at the per-track last frame; detections at 9
        for (auto& t : tracks)
            for (auto& d : s.dets) d.frame = std::max(d.frame, t.last_update_frame + 1);

        std::vector<const Track*> ptrs;
        for (auto& t : tracks) ptrs.push_back(&t);
        const CostMatrix lib = jcma_cost(ptrs, s.dets, cfg);
        for (int i = 0; i < lib.rows && c.ok; ++i)
            for (int j = 0; j < lib.cols && c.ok; ++j) {
                const double expected = oracle_jcma_entry(s, i, j, cfg);
                c.expect(std::abs(lib.at(i, j) - expected) < 1e-9,
                         "trial " + std::to_string(trial) + " entry (" + std::to_string(i) + "," +
                             std::to_string(j) + "): " + std::to_string(lib.at(i, j)) + " vs " +
                             std::to_string(expected));
            }
    }
    REQUIRE(c.ok);
}

TEST_CASE("criterion 4: mixture fitting", "[acceptance]") {
    Criterion c{4, "100 seeded fits: monotone log-likelihood, bounded iterations, "
                   "cluster fractions within 0.05"};
    std::mt19937_64 rng(515151);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    for (int trial = 0; trial < 100; ++trial) {
        const int n = 3 + static_cast<int>(rng() % 8);  // 3..10
        const bool clustered = trial % 2 == 1 && n >= 6;
        std::vector<TrackFeature> samples;
        int n_first = 0;
        for (int i = 0; i < n; ++i) {
            TrackFeature f;
            if (clustered) {
                const bool first = i < (n + 1) / 2;
                n_first += first ? 1 : 0;
                const double cx = first ? 100.0 : 1400.0;
                f.x_abs = cx + 2.0 * g(rng);
                f.y_abs = 400.0 + 2.0 * g(rng);
                f.v_x = (first ? 4.0 : -6.0) + 0.1 * g(rng);
            } else {
                f.x_abs = 1500.0 * u(rng);
                f.y_abs = 900.0 * u(rng);
                f.v_x = 10.0 * g(rng);
                f.v_y = 10.0 * g(rng);
                f.theta = 3.0 * (u(rng) - 0.5);
            }
            f.x_rel = f.x_abs / 1920.0;
            f.y_rel = f.y_abs / 1080.0;
            f.w = 0.3 + 0.7 * u(rng);
            samples.push_back(f);
        }

        const int k = adaptive_k(n);
        const GaussianMixture gm = fit_gmm(samples, k, trial);
        c.expect(gm.iterations <= 50, "iterations exceeded 50");
        for (std::size_t i = 1; i < gm.loglik_trace.size(); ++i)
            c.expect(gm.loglik_trace[i] >= gm.loglik_trace[i - 1] - 1e-9,
                     "log-likelihood decreased on trial " + std::to_string(trial));

        if (clustered && k == 2) {
            const double frac_first = static_cast<double>(n_first) / n;
            const int lo = gm.mean[0][0] < gm.mean[1][0] ? 0 : 1;
            c.expect(std::abs(gm.weight[lo] - frac_first) <= 0.05,
                     "cluster fraction off on trial " + std::to_string(trial));
        }
        if (!c.ok) break;
    }
    REQUIRE(c.ok);
}

TEST_CASE("criterion 5: recovery formula point checks", "[acceptance]") {
    Criterion c{5, "decay, component count, time constraint and score gate point values"};
    c.expect(std::abs(decay_weight(10, 0, 0.1) - 0.3678794) <= 1e-7, "decay_weight(10)");
    c.expect(adaptive_k(3) == 1, "adaptive_k(3)");
    c.expect(adaptive_k(9) == 2, "adaptive_k(9)");
    c.expect(adaptive_k(1) == 1, "adaptive_k(1)");

    std::vector<TrackFeature> s(2);
    s[0].w = 1.0;
    s[1].w = std::exp(-1.0);
    c.expect(std::abs(time_constraint(s) - 0.6839397) <= 1e-7, "time_constraint");

    GaussianMixture g;
    g.k = 1;
    g.weight[0] = 1.0;
    g.mean[0].fill(0.0);
    g.var[0].fill(1.0);
    std::vector<TrackFeature> hist(2);
    hist[0].w = 1.0;
    hist[1].w = 0.5;  // time constraint 0.75
    TrackFeature z{};
    z.x_abs = std::sqrt(-2.0 * std::log(0.8));  // kernel 0.8
    c.expect(std::abs(recovery_score(g, hist, z) - 0.6) <= 1e-9,
             "recovery_score(0.8, 0.75) != 0.6");
    c.expect(TrackerConfig{}.tau_t == 0.6, "tau_t default");
    REQUIRE(c.ok);
}

TEST_CASE("criterion 6: metric oracle on scripted scenes", "[acceptance]") {
    Criterion c{6, "five scripted scenes match brute-force metric enumeration"};
    auto box = [](double x, double y, double s = 100.0) { return BoundingBox{x, y, s, s}; };

    // scene 1: identical two-target sequences
    {
        Scene gt;
        for (int f = 1; f <= 8; ++f) {
            gt.add(f, 1, box(10.0 * f, 50));
            gt.add(f, 2, box(600, 10.0 * f));
        }
        compare_reports(c, "identical", gt, gt);
        const auto r = metrics::evaluate(gt, gt);
        c.expect(r.idf1 == 1.0 && r.mota == 1.0 && r.hota == 1.0, "identical not perfect");
    }

    // scene 2: the id switch halfway
    {
        Scene gt, pred;
        for (int f = 1; f <= 10; ++f) {
            gt.add(f, 1, box(10.0 * f, 50));
            pred.add(f, f <= 5 ? 7 : 8, box(10.0 * f, 50));
        }
        compare_reports(c, "switch", gt, pred);
        const auto r = metrics::evaluate(gt, pred);
        c.expect(std::abs(r.idf1 - 0.5) < 1e-12, "switch idf1");
        c.expect(std::abs(r.assa - 0.5) < 1e-12, "switch assa");
        c.expect(std::abs(r.hota - std::sqrt(0.5)) < 1e-12, "switch hota");
        c.expect(r.idsw == 1, "switch idsw");
    }

    // scene 3: half the frames missed
    {
        Scene gt, pred;
        for (int f = 1; f <= 10; ++f) {
            gt.add(f, 1, box(10.0 * f, 50));
            if (f <= 5) pred.add(f, 3, box(10.0 * f, 50));
        }
        compare_reports(c, "missed", gt, pred);
        const auto r = metrics::evaluate(gt, pred);
        c.expect(std::abs(r.deta - 0.5) < 1e-12 && std::abs(r.hota - 0.5) < 1e-12,
                 "missed-frame values");
    }

    // scene 4: a persistent false-positive track plus localization error
    {
        Scene gt, pred;
        for (int f = 1; f <= 10; ++f) {
            gt.add(f, 1, box(10.0 * f, 50));
            pred.add(f, 1, box(10.0 * f + 30.0, 50));  // IoU 7/13
            pred.add(f, 99, box(1500, 900));
        }
        compare_reports(c, "fp-track", gt, pred);
    }

    // scene 5: two targets with a one-frame swap and a missing frame
    {
        Scene gt, pred;
        for (int f = 1; f <= 9; ++f) {
            gt.add(f, 1, box(0, 0));
            gt.add(f, 2, box(600, 600));
            if (f == 7) continue;  // both missed once
            const bool swapped = f == 4;
            pred.add(f, swapped ? 2 : 1, box(0, 0));
            pred.add(f, swapped ? 1 : 2, box(600, 600));
        }
        compare_reports(c, "swap", gt, pred);
        const auto r = metrics::evaluate(gt, pred);
        c.expect(r.idsw == 4, "swap idsw");
    }

    REQUIRE(c.ok);
}

TEST_CASE("criterion 7: detection-mode schedule trace", "[acceptance]") {
    Criterion c{7, "400-frame mode trace and the early all-miss reset land on exact frames"};

    auto track_at = [](Vec2 p, int consecutive) {
        Track t;
        t.id = 1;
        t.state = TrackState::Active;
        t.push_observation(1, box_from_center(p, 20, 20), 0.9, 30);
        t.motion = kf_init(t.last_box());
        t.motion.mean.tail(4).setZero();
        t.consecutive_matched = consecutive;
        return t;
    };

    {
        TrackerConfig cfg;  // n_g 30, n_l 120, n_m 5
        Scheduler sched(cfg);
        std::vector<Track> tracks = {track_at({960, 540}, 0)};
        bool trace_ok = true;
        for (int frame = 1; frame <= 400; ++frame) {
            tracks[0].consecutive_matched = frame >= 3 ? 3 : 0;  // stable from frame 3
            const Mode expected = [&] {
                if (frame <= 30) return Mode::GD;
                if (frame <= 150) return Mode::LD;
                if (frame <= 180) return Mode::GD;
                if (frame <= 300) return Mode::LD;
                if (frame <= 330) return Mode::GD;
                return Mode::LD;
            }();
            if (sched.mode() != expected) {
                trace_ok = false;
                c.expect(false, "mode wrong at frame " + std::to_string(frame));
                break;
            }
            std::map<int, int> found;
            for (const auto& r : sched.rois()) found[r.id] = 1;
            sched.advance(tracks, found, frame);
        }
        c.expect(trace_ok, "trace");
    }

    {
        TrackerConfig cfg;
        Scheduler sched(cfg);
        std::vector<Track> tracks = {track_at({960, 540}, 5)};
        // local mode from frame 31; every window empty from frame 90 on
        for (int frame = 1; frame <= 120; ++frame) {
            const bool blackout = frame >= 90;
            std::map<int, int> found;
            for (const auto& r : sched.rois()) found[r.id] = blackout ? 0 : 1;
            const Mode before = sched.mode();
            if (frame >= 31 && frame <= 94)
                c.expect(before == Mode::LD, "lost local mode early at " + std::to_string(frame));
            if (frame == 95)
                c.expect(before == Mode::GD,
                         "reset did not land on frame 95 after five misses");
            sched.advance(tracks, found, frame);
        }
    }
    REQUIRE(c.ok);
}

TEST_CASE("criterion 8: component ablation direction", "[acceptance]") {
    Criterion c{8, "20 seeded scenarios: full tracker halves the switches and gains 5 idf1 points"};
    const auto t0 = std::chrono::steady_clock::now();

    const auto suite = make_suite("mixed", 20, 7);
    const TrackerConfig tcfg;
    const AblationRow base = run_suite(suite, tcfg, "baseline", {true, false, false});
    const AblationRow full = run_suite(suite, tcfg, "full", {false, true, true});

    c.expect(full.idsw * 2 <= base.idsw,
             "idsw " + std::to_string(full.idsw) + " vs baseline " + std::to_string(base.idsw));
    c.expect(full.idsw < base.idsw, "idsw not strictly better");
    c.expect(100.0 * (full.idf1 - base.idf1) >= 5.0,
             "idf1 gain " + std::to_string(100.0 * (full.idf1 - base.idf1)) + " below 5 points");

    const double secs = elapsed_s(t0);
    c.expect(secs < 120.0, "runtime " + std::to_string(secs) + "s over budget");
    std::printf("    ablation: baseline idsw %ld idf1 %.2f | full idsw %ld idf1 %.2f (%.1fs)\n",
                base.idsw, 100.0 * base.idf1, full.idsw, 100.0 * full.idf1, secs);
    REQUIRE(c.ok);
}

TEST_CASE("criterion 9: association throughput", "[acceptance]") {
    Criterion c{9, "busy-scene step rate stays above 1000 frames per second"};

    TrackerConfig cfg;
    Tracker tracker(cfg);
    std::mt19937_64 rng(8080);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    // ten persistent targets, two blinking ones (recovery candidates), and
    // enough confident clutter to keep stage three busy
    const int frames = 3000;
    std::vector<Vec2> anchors;
    std::vector<Vec2> vels;
    for (int i = 0; i < 12; ++i) {
        anchors.push_back({200.0 + 130.0 * i, 300.0 + 40.0 * (i % 4)});
        vels.push_back({3.0 + 0.5 * (i % 5), 2.0 - 0.4 * (i % 3)});
    }

    const auto t0 = std::chrono::steady_clock::now();
    for (int f = 1; f <= frames; ++f) {
        std::vector<Detection> dets;
        for (int i = 0; i < 12; ++i) {
            const bool blinking = i >= 10;
            if (blinking && (f / 10) % 2 == 1) continue;  // off for ten-frame stretches
            Vec2 p = anchors[i] + vels[i] * f;
            // keep everything inside the frame
            p.x = 100.0 + std::fmod(std::abs(p.x), 1700.0);
            p.y = 100.0 + std::fmod(std::abs(p.y), 800.0);
            Detection d;
            d.frame = f;
            d.box = box_from_center(p, 16, 16);
            d.confidence = 0.9;
            dets.push_back(d);
        }
        for (int k = 0; k < 3; ++k) {
            Detection d;
            d.frame = f;
            d.box = box_from_center({1800.0 * u(rng), 1000.0 * u(rng)}, 14, 14);
            d.confidence = 0.7;  // confident clutter exercises the recovery scorer
            dets.push_back(d);
        }
        tracker.step(dets, f);
    }
    const double secs = elapsed_s(t0);
    const double rate = frames / secs;
    std::printf("    throughput: %.0f steps/s (%.3f ms/frame)\n", rate, 1000.0 * secs / frames);
    c.expect(rate >= 1000.0, "rate " + std::to_string(rate) + " below 1000 steps/s");
    REQUIRE(c.ok);
}

TEST_CASE("criterion 10: fusion block invariants", "[acceptance]") {
    Criterion c{10, "attention/fusion simplexes, zero-motion and residual identities, shapes"};
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& r : stff::run_invariant_checks(20250809))
        c.expect(r.pass, r.name + (r.detail.empty() ? "" : " (" + r.detail + ")"));
    const double secs = elapsed_s(t0);
    c.expect(secs < 10.0, "runtime " + std::to_string(secs) + "s over budget");
    REQUIRE(c.ok);
}

TEST_CASE("criterion 11: round trips and determinism", "[acceptance]") {
    Criterion c{11, "file format round trip; repeated runs are byte-identical"};

    // record-level round trip
    {
        TempDir tmp("rt");
        std::vector<io::MotRecord> records;
        std::mt19937_64 rng(3131);
        std::uniform_real_distribution<double> u(0.0, 1000.0);
        for (int i = 0; i < 200; ++i)
            records.push_back({1 + static_cast<int>(rng() % 50), static_cast<int>(rng() % 7) - 1,
                               u(rng), u(rng), 1.0 + u(rng) / 20.0, 1.0 + u(rng) / 20.0,
                               u(rng) / 1000.0});
        io::write_mot_file(tmp.path("a.txt"), records);
        const auto parsed = io::parse_mot_file(tmp.path("a.txt"));
        io::write_mot_file(tmp.path("b.txt"), parsed);
        c.expect(slurp(tmp.path("a.txt")) == slurp(tmp.path("b.txt")),
                 "record round trip not byte-stable");
        c.expect(parsed.size() == records.size(), "record count");
        for (std::size_t i = 0; i < records.size(); ++i)
            c.expect(std::abs(parsed[i].x - records[i].x) < 5e-7 &&
                         std::abs(parsed[i].conf - records[i].conf) < 5e-7,
                     "field drift beyond 1e-6");
    }

    // whole-pipeline determinism through the command-line tool
    {
        TempDir tmp("det");
        {
            std::ofstream f(tmp.path("run.cfg"));
            f << "frames = 200\nn_targets = 3\nseed = 77\n";
        }
        c.expect(run_cli("simulate --config " + tmp.path("run.cfg") + " --out " + tmp.path("a")) ==
                     0,
                 "simulate a failed");
        c.expect(run_cli("simulate --config " + tmp.path("run.cfg") + " --out " + tmp.path("b")) ==
                     0,
                 "simulate b failed");
        for (const char* name : {"gt.txt", "det_global.txt", "manifest.cfg"})
            c.expect(slurp(tmp.path("a") + "/" + name) == slurp(tmp.path("b") + "/" + name),
                     std::string("simulate output differs: ") + name);

        c.expect(run_cli("track --det " + tmp.path("a") + " --out " + tmp.path("r1.txt")) == 0,
                 "track 1 failed");
        c.expect(run_cli("track --det " + tmp.path("a") + " --out " + tmp.path("r2.txt")) == 0,
                 "track 2 failed");
        c.expect(slurp(tmp.path("r1.txt")) == slurp(tmp.path("r2.txt")),
                 "track outputs differ between runs");

        c.expect(run_cli("eval --gt " + tmp.path("a") + "/gt.txt --res " + tmp.path("r1.txt"),
                         tmp.path("e1.txt")) == 0,
                 "eval 1 failed");
        c.expect(run_cli("eval --gt " + tmp.path("a") + "/gt.txt --res " + tmp.path("r2.txt"),
                         tmp.path("e2.txt")) == 0,
                 "eval 2 failed");
        c.expect(slurp(tmp.path("e1.txt")) == slurp(tmp.path("e2.txt")), "eval reports differ");
    }
    REQUIRE(c.ok);
}
