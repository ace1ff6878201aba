#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "atlas/complexity.hpp"
#include "atlas/econometrics.hpp"
#include "atlas/inequality.hpp"
#include "atlas/ingest.hpp"
#include "atlas/json_io.hpp"
#include "atlas/productspace.hpp"

namespace atlas::service {

/// Inputs for a snapshot build. Paths in a config file are resolved relative
/// to the file's directory.
struct BuildConfig {
    std::filesystem::path trade;
    ingest::TradeSchema schema;
    std::vector<std::filesystem::path> panels;
    std::vector<ingest::PeriodSpec> periods = ingest::default_periods();
    ingest::FrameFilter filter;
    std::string gini_dataset = "ehii";
    double backbone_threshold = productspace::kDefaultBackboneThreshold;
    bool pooled_proximity = false;
    std::filesystem::path output = "snapshot";
};

BuildConfig parse_config(std::string_view text, const std::filesystem::path& base_dir);
BuildConfig load_config(const std::filesystem::path& file);

struct PeriodArtifacts {
    ingest::PeriodSpec period;
    bool empty = true;
    matrix::ExportMatrix exports;
    matrix::RcaMatrix rca;
    matrix::AdvantageMatrix advantage;
    matrix::ShareMatrix shares;
    complexity::ComplexityScores scores;
    inequality::ProductGiniTable pgi;
    productspace::SpaceGraph space;
    std::vector<ingest::Exclusion> excluded;
    DropReport pruned;
};

struct Snapshot {
    std::vector<PeriodArtifacts> periods;
    econometrics::PanelDataset panel;
    std::map<std::string, std::string> input_digests;  // file name -> sha256
    std::vector<ingest::RowRejection> rejections;
    double backbone_threshold = productspace::kDefaultBackboneThreshold;
    std::string gini_dataset;
};

/// Runs the whole pipeline in memory.
Snapshot compute_snapshot(const BuildConfig& config);

/// Relative path -> file content for every artifact, including manifest.json.
/// Output is a pure function of the snapshot.
std::map<std::string, std::string> render_snapshot(const Snapshot& snapshot);

struct BuildSummary {
    std::string digest;
    std::filesystem::path directory;
    std::vector<std::string> files;
};

/// compute_snapshot + render_snapshot + write to `config.output`.
BuildSummary build_snapshot(const BuildConfig& config);

std::string sha256_hex(std::string_view bytes);

}  // namespace atlas::service
