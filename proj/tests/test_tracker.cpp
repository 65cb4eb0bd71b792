#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "jptrack/metrics.hpp"
#include "jptrack/tracker.hpp"

using namespace jptrack;

namespace {

Detection det_at(int frame, Vec2 c, double conf = 0.9, double w = 20, double h = 20) {
    Detection d;
    d.frame = frame;
    d.box = box_from_center(c, w, h);
    d.confidence = conf;
    return d;
}

// one target on a constant-velocity path, optional detection blackout
struct Scripted {
    metrics::TrajectorySet gt;
    std::map<int, std::vector<Detection>> dets;
};

Scripted straight_line_scenario(int frames, int gap_start = 0, int gap_end = -1) {
    Scripted s;
    for (int f = 1; f <= frames; ++f) {
        const Vec2 c{100.0 + 10.0 * f, 200.0};
        s.gt.add(f, 1, box_from_center(c, 20, 20));
        if (f >= gap_start && f <= gap_end) continue;
        s.dets[f].push_back(det_at(f, c));
    }
    return s;
}

}  // namespace

TEST_CASE("confidence split", "[tracker]") {
    std::vector<Detection> dets = {det_at(1, {0, 0}, 0.9), det_at(1, {0, 0}, 0.3),
                                   det_at(1, {0, 0}, 0.05)};
    const auto [high, low] = split_by_confidence(dets, 0.5, 0.1);
    REQUIRE(high.size() == 1);
    CHECK(high[0].confidence == 0.9);
    REQUIRE(low.size() == 1);
    CHECK(low[0].confidence == 0.3);

    std::vector<Detection> at_threshold = {det_at(1, {0, 0}, 0.5), det_at(1, {0, 0}, 0.5)};
    const auto [h2, l2] = split_by_confidence(at_threshold, 0.5, 0.1);
    CHECK(h2.size() == 2);
    CHECK(l2.empty());

    const auto [h3, l3] = split_by_confidence({}, 0.5, 0.1);
    CHECK(h3.empty());
    CHECK(l3.empty());

    CHECK_THROWS_AS(split_by_confidence(dets, 0.1, 0.5), ConfigError);
}

TEST_CASE("one clean target keeps one id for the whole run", "[tracker]") {
    const Scripted s = straight_line_scenario(100);
    Tracker tracker(TrackerConfig{});
    metrics::TrajectorySet pred;
    for (int f = 1; f <= 100; ++f) {
        const auto it = s.dets.find(f);
        const FrameResult r = tracker.step(it == s.dets.end() ? std::vector<Detection>{} : it->second, f);
        for (const auto& o : r.outputs) pred.add(f, o.id, o.box);
    }
    CHECK(pred.total_boxes() == 100);
    std::set<int> ids;
    for (const auto& [f, v] : pred.frames)
        for (const auto& [id, b] : v) ids.insert(id);
    CHECK(ids.size() == 1);
    CHECK(metrics::idsw_count(metrics::match_frames(s.gt, pred, 0.5)) == 0);
}

TEST_CASE("memory recovery keeps the id across an occlusion gap", "[tracker]") {
    const Scripted s = straight_line_scenario(100, 40, 49);

    Tracker full(TrackerConfig{});
    metrics::TrajectorySet pred;
    int id_before = -1, id_after = -1;
    FrameEvents events_at_50;
    for (int f = 1; f <= 100; ++f) {
        const auto it = s.dets.find(f);
        const FrameResult r =
            full.step(it == s.dets.end() ? std::vector<Detection>{} : it->second, f);
        if (f == 50) events_at_50 = r.events;
        for (const auto& o : r.outputs) {
            pred.add(f, o.id, o.box);
            if (f == 39) id_before = o.id;
            if (f == 50) id_after = o.id;
        }
    }
    CHECK(id_before != -1);
    CHECK(id_before == id_after);
    CHECK(events_at_50.recoveries == 1);
    CHECK(metrics::idsw_count(metrics::match_frames(s.gt, pred, 0.5)) == 0);
}

TEST_CASE("the baseline re-badges the target after the gap", "[tracker]") {
    const Scripted s = straight_line_scenario(100, 40, 49);

    Tracker baseline(TrackerConfig{}, TrackerOptions{.baseline = true});
    metrics::TrajectorySet pred;
    std::set<int> ids;
    for (int f = 1; f <= 100; ++f) {
        const auto it = s.dets.find(f);
        const FrameResult r =
            baseline.step(it == s.dets.end() ? std::vector<Detection>{} : it->second, f);
        for (const auto& o : r.outputs) {
            pred.add(f, o.id, o.box);
            ids.insert(o.id);
        }
    }
    CHECK(ids.size() == 2);
    CHECK(metrics::idsw_count(metrics::match_frames(s.gt, pred, 0.5)) == 1);
}

TEST_CASE("full and baseline agree on one clean target", "[tracker]") {
    const Scripted s = straight_line_scenario(60);
    Tracker full(TrackerConfig{});
    Tracker baseline(TrackerConfig{}, TrackerOptions{.baseline = true});
    for (int f = 1; f <= 60; ++f) {
        const auto& dets = s.dets.at(f);
        const FrameResult a = full.step(dets, f);
        const FrameResult b = baseline.step(dets, f);
        REQUIRE(a.outputs.size() == b.outputs.size());
        for (std::size_t i = 0; i < a.outputs.size(); ++i) {
            CHECK(a.outputs[i].id == b.outputs[i].id);
            CHECK(a.outputs[i].box.x == b.outputs[i].box.x);
            CHECK(a.outputs[i].box.y == b.outputs[i].box.y);
        }
    }
}

TEST_CASE("a detection consumed in stage one is invisible later", "[tracker]") {
    TrackerConfig cfg;
    Tracker tracker(cfg);
    // two established tracks
    std::vector<Detection> f1 = {det_at(1, {100, 100}), det_at(1, {500, 500})};
    tracker.step(f1, 1);
    std::vector<Detection> f2 = {det_at(2, {105, 100}), det_at(2, {505, 500})};
    tracker.step(f2, 2);
    // three high-confidence detections: two continuations, one newcomer
    std::vector<Detection> f3 = {det_at(3, {110, 100}), det_at(3, {510, 500}),
                                 det_at(3, {900, 200})};
    const FrameResult r = tracker.step(f3, 3);
    CHECK(r.events.stage1_candidates == 3);
    CHECK(r.events.stage1_pairs == 2);
    CHECK(r.events.stage3_candidates == r.events.stage1_candidates - r.events.stage1_pairs);
    CHECK(r.events.births == 1);
    // low-confidence pool was empty
    CHECK(r.events.stage2_candidates == 0);
    CHECK(r.events.stage2_pairs == 0);
}

TEST_CASE("low-confidence detections rescue unmatched tracks in stage two", "[tracker]") {
    TrackerConfig cfg;
    Tracker tracker(cfg);
    tracker.step({det_at(1, {100, 100})}, 1);
    tracker.step({det_at(2, {110, 100})}, 2);
    // the only evidence this frame is a low-confidence box on the path
    const FrameResult r = tracker.step({det_at(3, {120, 100}, 0.2)}, 3);
    CHECK(r.events.stage2_candidates == 1);
    CHECK(r.events.stage2_pairs == 1);
    REQUIRE(r.outputs.size() == 1);
}

TEST_CASE("detections below the low threshold are discarded", "[tracker]") {
    TrackerConfig cfg;
    Tracker tracker(cfg);
    const FrameResult r = tracker.step({det_at(1, {100, 100}, 0.05)}, 1);
    CHECK(r.outputs.empty());
    CHECK(r.events.births == 0);
    CHECK(tracker.tracks().empty());
}

TEST_CASE("tentative tracks need two consecutive matches away from frame one", "[tracker]") {
    TrackerConfig cfg;
    Tracker tracker(cfg);
    tracker.step({}, 1);
    const FrameResult r2 = tracker.step({det_at(2, {100, 100})}, 2);
    CHECK(r2.outputs.empty());  // born tentative
    CHECK(r2.events.births == 1);
    const FrameResult r3 = tracker.step({det_at(3, {105, 100})}, 3);
    REQUIRE(r3.outputs.size() == 1);
}

TEST_CASE("empty frames age active tracks into lost", "[tracker]") {
    TrackerConfig cfg;
    Tracker tracker(cfg);
    tracker.step({det_at(1, {100, 100})}, 1);
    const FrameResult r = tracker.step({}, 2);
    CHECK(r.outputs.empty());
    CHECK(r.events.losses == 1);
    REQUIRE(tracker.tracks().size() == 1);
    CHECK(tracker.tracks()[0].state == TrackState::Lost);
}

TEST_CASE("lost tracks are removed after the age limit", "[tracker]") {
    TrackerConfig cfg;
    cfg.max_lost_age = 5;
    Tracker tracker(cfg);
    tracker.step({det_at(1, {100, 100})}, 1);
    for (int f = 2; f <= 8; ++f) tracker.step({}, f);
    CHECK(tracker.tracks().empty());
}

TEST_CASE("ids are never reused", "[tracker]") {
    TrackerConfig cfg;
    cfg.max_lost_age = 2;
    Tracker tracker(cfg);
    std::set<int> all_ids;
    // repeated births and deaths at different spots
    for (int round = 0; round < 5; ++round) {
        const int base = round * 10 + 1;
        for (int f = base; f < base + 4; ++f) {
            tracker.step({det_at(f, {100.0 + 300.0 * (round % 3), 100})}, f);
            for (const auto& t : tracker.tracks()) all_ids.insert(t.id);
        }
        for (int f = base + 4; f < base + 10; ++f) tracker.step({}, f);
    }
    // five birth rounds, each a fresh id
    CHECK(all_ids.size() == 5);
}

TEST_CASE("frame indices must advance and match the detections", "[tracker]") {
    Tracker tracker(TrackerConfig{});
    tracker.step({det_at(1, {100, 100})}, 1);
    CHECK_THROWS_AS(tracker.step({}, 1), std::invalid_argument);
    CHECK_THROWS_AS(tracker.step({det_at(9, {0, 0})}, 2), std::invalid_argument);
}

TEST_CASE("no detection feeds two tracks in one frame", "[tracker]") {
    TrackerConfig cfg;
    Tracker tracker(cfg);
    tracker.step({det_at(1, {100, 100}), det_at(1, {130, 100})}, 1);
    for (int f = 2; f <= 10; ++f) {
        const FrameResult r = tracker.step(
            {det_at(f, {100.0 + f, 100}), det_at(f, {130.0 + f, 100})}, f);
        std::set<int> ids;
        for (const auto& o : r.outputs) ids.insert(o.id);
        CHECK(ids.size() == r.outputs.size());
        CHECK(r.events.id_assignments <= 2);
    }
}
