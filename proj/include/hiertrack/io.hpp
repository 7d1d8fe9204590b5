#pragma once

#include "hiertrack/core.hpp"
#include "hiertrack/metrics.hpp"
#include "hiertrack/synth.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace hiertrack {

inline constexpr const char* kDetectionsFile = "detections.csv";
inline constexpr const char* kEmbeddingsFile = "embeddings.bin";
inline constexpr const char* kGroundTruthFile = "gt.csv";

/// Header `frame,id,x,y,w,h,conf,class`; id -1 marks an unlabeled detection.
void write_detections_csv(const std::filesystem::path& path, std::span<const Detection> detections);
/// Row i gets embedding_id i.
std::vector<Detection> read_detections_csv(const std::filesystem::path& path);

/// Magic "HTRKEMB\0", u32 version, u64 rows, u32 dim, then rows*dim float32, all little-endian.
void write_embeddings(const std::filesystem::path& path, const EmbeddingTable& table);
EmbeddingTable read_embeddings(const std::filesystem::path& path);

/// Header `frame,identity,x,y,w,h,confidence,class,interpolated_flag`, rows sorted by (frame, identity).
void write_tracks_csv(const std::filesystem::path& path, std::span<const TrackRow> rows);
std::vector<TrackRow> read_tracks_csv(const std::filesystem::path& path);

struct Sequence {
    std::string name;
    std::vector<Detection> detections;
    EmbeddingTable embeddings;  // unit-length rows

    int frame_end() const;
};

/// Writes detections.csv, embeddings.bin and gt.csv into `dir` (created if missing).
void write_scenario(const std::filesystem::path& dir, const Scenario& scenario);

/// Loads one sequence directory and checks that the embedding rows line up with the detections.
Sequence load_sequence(const std::filesystem::path& dir);

/// A directory holding detections.csv is one sequence; otherwise every subdirectory that does is
/// loaded, in name order.
std::vector<Sequence> load_dataset(const std::filesystem::path& dir);

}  // namespace hiertrack
