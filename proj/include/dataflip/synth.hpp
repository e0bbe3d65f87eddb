#pragma once

#include <cstdint>
#include <vector>

#include "dataflip/errors.hpp"

namespace dataflip::synth {

struct PoolConfig {
  int num_classes = 5;
  int feature_dim = 16;
  double class_separation = 4.0;    // distance of class means from the origin
  double noise_scale = 1.0;
  double perturbation_strength = 2.0;
  std::uint64_t master_seed = 20240601;

  void validate() const;  // throws ValidationError
  std::uint64_t hash() const;
  bool operator==(const PoolConfig&) const = default;
};

// (class, draw) pair. Features are a pure function of (PoolConfig, SampleId),
// so ids are stable handles and samples never need storing.
struct SampleId {
  int class_index = 0;
  std::int64_t draw_index = 0;

  auto operator<=>(const SampleId&) const = default;
};

struct Sample {
  SampleId id;
  std::vector<double> features;
  int label = 0;
};

// Draw indices at or above this mark are reserved for test sets. Training
// cursors start at zero and can never reach it.
inline constexpr std::int64_t kTestStreamBase = std::int64_t{1} << 62;

class DataPool {
 public:
  explicit DataPool(PoolConfig config);

  const PoolConfig& config() const { return config_; }
  std::uint64_t config_hash() const { return config_hash_; }

  // Regenerates the sample for an id; bit-identical for equal (config, id).
  Sample sample(SampleId id) const;

  std::vector<double> class_mean(int class_index) const;

 private:
  PoolConfig config_;
  std::uint64_t config_hash_;
};

DataPool make_pool(const PoolConfig& config);

// Per-class fresh-draw positions for one dataset lineage. A lineage's draws
// never repeat an id because every draw advances its cursor.
struct Cursor {
  std::vector<std::int64_t> next;

  static Cursor zeros(int num_classes) { return Cursor{std::vector<std::int64_t>(num_classes, 0)}; }
};

// Draws `count` fresh samples of one class, advancing the cursor.
std::vector<Sample> draw(const DataPool& pool, int class_index, int count, Cursor& cursor);

struct TestSet {
  std::vector<Sample> samples;
  std::uint64_t provenance = 0;  // pool config hash

  // Hash of the ordered id list; outcome vectors use it as their alignment key.
  std::uint64_t id_hash() const;
  std::vector<int> labels() const;
};

// Frozen balanced test set drawn from the reserved id block, disjoint from
// every training draw.
TestSet make_test_set(const DataPool& pool, int per_class);

}  // namespace dataflip::synth
