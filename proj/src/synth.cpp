#include "dataflip/synth.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "dataflip/hash.hpp"

namespace dataflip::synth {

namespace {

constexpr std::uint64_t kSampleSalt = 0x5a6d7039e1caf3b7ULL;
constexpr std::uint64_t kClassDirSalt = 0x1f0c9a4b8d2e6315ULL;

std::uint64_t sample_seed(std::uint64_t master_seed, SampleId id) {
  std::uint64_t h = hash_combine(kSampleSalt, master_seed);
  h = hash_combine(h, static_cast<std::uint64_t>(id.class_index));
  return hash_combine(h, static_cast<std::uint64_t>(id.draw_index));
}

}  // namespace

void PoolConfig::validate() const {
  if (num_classes < 2) throw ValidationError("pool: num_classes must be >= 2");
  if (feature_dim < 2) throw ValidationError("pool: feature_dim must be >= 2");
  if (!(class_separation > 0.0)) throw ValidationError("pool: class_separation must be > 0");
  if (!(noise_scale > 0.0)) throw ValidationError("pool: noise_scale must be > 0");
  if (perturbation_strength < 0.0) {
    throw ValidationError("pool: perturbation_strength must be >= 0");
  }
}

std::uint64_t PoolConfig::hash() const {
  std::uint64_t h = hash_string("pool-config");
  h = hash_combine(h, static_cast<std::uint64_t>(num_classes));
  h = hash_combine(h, static_cast<std::uint64_t>(feature_dim));
  h = hash_combine(h, hash_double(class_separation));
  h = hash_combine(h, hash_double(noise_scale));
  h = hash_combine(h, hash_double(perturbation_strength));
  return hash_combine(h, master_seed);
}

DataPool::DataPool(PoolConfig config) : config_(config), config_hash_(config.hash()) {
  config_.validate();
}

DataPool make_pool(const PoolConfig& config) { return DataPool(config); }

std::vector<double> DataPool::class_mean(int class_index) const {
  const int d = config_.feature_dim;
  std::vector<double> mean(static_cast<std::size_t>(d), 0.0);
  if (class_index < d) {
    mean[static_cast<std::size_t>(class_index)] = config_.class_separation;
    return mean;
  }
  // More classes than axes: deterministic unit direction per class.
  Rng rng(hash_combine(kClassDirSalt, static_cast<std::uint64_t>(class_index)));
  double norm2 = 0.0;
  for (auto& m : mean) {
    m = rng.normal();
    norm2 += m * m;
  }
  const double scale = config_.class_separation / std::sqrt(norm2);
  for (auto& m : mean) m *= scale;
  return mean;
}

Sample DataPool::sample(SampleId id) const {
  if (id.class_index < 0 || id.class_index >= config_.num_classes) {
    throw ValidationError("sample id: class " + std::to_string(id.class_index) +
                          " out of range for K=" + std::to_string(config_.num_classes));
  }
  const int d = config_.feature_dim;
  Rng rng(sample_seed(config_.master_seed, id));

  std::vector<double> noise(static_cast<std::size_t>(d));
  double norm2 = 0.0;
  for (auto& g : noise) {
    g = rng.normal();
    norm2 += g * g;
  }

  // Persistent perturbation: rotate the noise offset in a sample-specific
  // coordinate plane and scale it by its own squared radius. The distortion
  // is nonlinear in the offset, so classes overlap in a way extra samples can
  // only partially resolve.
  const double theta = rng.uniform(-std::numbers::pi, std::numbers::pi);
  auto a = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(d)));
  auto b = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(d - 1)));
  if (b >= a) ++b;
  std::vector<double> warp = noise;
  const double wa = std::cos(theta) * noise[a] - std::sin(theta) * noise[b];
  const double wb = std::sin(theta) * noise[a] + std::cos(theta) * noise[b];
  warp[a] = wa;
  warp[b] = wb;
  const double radial = norm2 / d;
  for (auto& w : warp) w *= radial;

  Sample s;
  s.id = id;
  s.label = id.class_index;
  s.features = class_mean(id.class_index);
  for (int i = 0; i < d; ++i) {
    s.features[static_cast<std::size_t>(i)] +=
        config_.noise_scale * noise[static_cast<std::size_t>(i)] +
        config_.perturbation_strength * warp[static_cast<std::size_t>(i)];
  }
  return s;
}

std::vector<Sample> draw(const DataPool& pool, int class_index, int count, Cursor& cursor) {
  const int k = pool.config().num_classes;
  if (class_index < 0 || class_index >= k) {
    throw ValidationError("draw: class " + std::to_string(class_index) +
                          " out of range for K=" + std::to_string(k));
  }
  if (static_cast<int>(cursor.next.size()) != k) {
    throw ValidationError("draw: cursor arity does not match pool class count");
  }
  std::vector<Sample> samples;
  samples.reserve(static_cast<std::size_t>(count > 0 ? count : 0));
  auto& next = cursor.next[static_cast<std::size_t>(class_index)];
  for (int i = 0; i < count; ++i) {
    samples.push_back(pool.sample(SampleId{class_index, next++}));
  }
  return samples;
}

std::uint64_t TestSet::id_hash() const {
  std::uint64_t h = hash_string("test-set");
  h = hash_combine(h, provenance);
  for (const auto& s : samples) {
    h = hash_combine(h, static_cast<std::uint64_t>(s.id.class_index));
    h = hash_combine(h, static_cast<std::uint64_t>(s.id.draw_index));
  }
  return h;
}

std::vector<int> TestSet::labels() const {
  std::vector<int> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.label);
  return out;
}

TestSet make_test_set(const DataPool& pool, int per_class) {
  if (per_class < 1) throw ValidationError("test set: per_class must be >= 1");
  TestSet test;
  test.provenance = pool.config_hash();
  const int k = pool.config().num_classes;
  test.samples.reserve(static_cast<std::size_t>(k) * static_cast<std::size_t>(per_class));
  for (int c = 0; c < k; ++c) {
    for (int i = 0; i < per_class; ++i) {
      test.samples.push_back(pool.sample(SampleId{c, kTestStreamBase + i}));
    }
  }
  return test;
}

}  // namespace dataflip::synth
