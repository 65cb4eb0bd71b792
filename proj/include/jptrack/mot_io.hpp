#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "jptrack/config.hpp"
#include "jptrack/geometry.hpp"
#include "jptrack/metrics.hpp"

namespace jptrack::io {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One MOTChallenge-format line: frame,id,x,y,w,h,conf,-1,-1,-1.
/// Detections carry id -1.
struct MotRecord {
    int frame = 0;
    int id = -1;
    double x = 0.0, y = 0.0, w = 0.0, h = 0.0;
    double conf = 1.0;
};

inline std::vector<MotRecord> parse_mot_stream(std::istream& in, const std::string& origin) {
    std::vector<MotRecord> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        // tolerate trailing carriage returns and blank lines
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (line.empty()) continue;

        std::vector<double> fields;
        std::stringstream ss(line);
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                std::size_t pos = 0;
                fields.push_back(std::stod(item, &pos));
                if (pos != item.find_last_not_of(" \t") + 1 && pos < item.size())
                    throw std::invalid_argument(item);
            } catch (const std::exception&) {
                throw ParseError(origin + " line " + std::to_string(line_no) +
                                 ": bad numeric field '" + item + "'");
            }
        }
        if (fields.size() != 10)
            throw ParseError(origin + " line " + std::to_string(line_no) + ": expected 10 fields, got " +
                             std::to_string(fields.size()));

        MotRecord r;
        r.frame = static_cast<int>(fields[0]);
        r.id = static_cast<int>(fields[1]);
        r.x = fields[2];
        r.y = fields[3];
        r.w = fields[4];
        r.h = fields[5];
        r.conf = fields[6];
        if (r.frame < 1)
            throw ParseError(origin + " line " + std::to_string(line_no) + ": frame index below 1");
        if (r.w <= 0.0 || r.h <= 0.0)
            throw ParseError(origin + " line " + std::to_string(line_no) + ": non-positive box size");
        out.push_back(r);
    }
    return out;
}

inline std::vector<MotRecord> parse_mot_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open MOT file: " + path);
    return parse_mot_stream(f, path);
}

/// Rows with a real id become trajectories; id -1 rows are skipped.
inline metrics::TrajectorySet to_trajectories(const std::vector<MotRecord>& records) {
    metrics::TrajectorySet out;
    for (const auto& r : records) {
        if (r.id < 0) continue;
        out.add(r.frame, r.id, {r.x, r.y, r.w, r.h});
    }
    return out;
}

/// Rows keyed by frame as detector output; real-id rows are accepted too
/// (the id is dropped).
inline std::map<int, std::vector<Detection>> to_detections(const std::vector<MotRecord>& records) {
    std::map<int, std::vector<Detection>> out;
    for (const auto& r : records) {
        Detection d;
        d.frame = r.frame;
        d.box = {r.x, r.y, r.w, r.h};
        d.confidence = r.conf;
        out[r.frame].push_back(d);
    }
    return out;
}

inline std::string format_mot_record(const MotRecord& r) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%d,%d,%.6f,%.6f,%.6f,%.6f,%.6f,-1,-1,-1", r.frame, r.id, r.x,
                  r.y, r.w, r.h, r.conf);
    return buf;
}

inline void write_mot_file(const std::string& path, const std::vector<MotRecord>& records) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write MOT file: " + path);
    for (const auto& r : records) f << format_mot_record(r) << "\n";
}

inline std::vector<MotRecord> from_trajectories(const metrics::TrajectorySet& ts) {
    std::vector<MotRecord> out;
    for (const auto& [frame, boxes] : ts.frames)
        for (const auto& [id, b] : boxes) out.push_back({frame, id, b.x, b.y, b.w, b.h, 1.0});
    return out;
}

inline std::vector<MotRecord> from_detections(const std::map<int, std::vector<Detection>>& dets) {
    std::vector<MotRecord> out;
    for (const auto& [frame, v] : dets)
        for (const auto& d : v)
            out.push_back({frame, -1, d.box.x, d.box.y, d.box.w, d.box.h, d.confidence});
    return out;
}

}  // namespace jptrack::io
