#pragma once

#include "chirp/mlp.hpp"
#include "chirp/spectral.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>

namespace chirp {

inline constexpr int kModelFormatVersion = 1;

/// Everything needed to classify a new clip: the network with its input
/// subset, normalization and labels, plus the extraction settings it was
/// trained under.
struct Model {
  Network network;
  ExtractionConfig extraction;
  std::uint64_t seed = 0;
  StopReason stop_reason = StopReason::EpochCap;
};

/// JSON document; weight matrices are stored row-major with the bias row first.
void write_model(std::ostream& out, const Model& model);
void write_model(const std::filesystem::path& path, const Model& model);

/// Throws MalformedModel for syntax errors, a wrong format_version, or
/// weight and normalization shapes inconsistent with the stored topology.
/// A feature subset whose length disagrees with the input layer is kept;
/// classification then fails with DimensionMismatch.
Model read_model(std::istream& in);
Model read_model(const std::filesystem::path& path);

}  // namespace chirp
