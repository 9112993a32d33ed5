#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "torsonet/image.hpp"
#include "torsonet/serialize.hpp"

namespace torsonet {

inline const std::vector<std::string> kDefaultClassNames = {
    "dv_upper", "dv_lower", "lat_upper", "lat_lower"};

struct DatasetIndex {
  struct Entry {
    std::filesystem::path path;
    int class_index;
  };
  std::vector<Entry> entries;
  std::vector<std::string> class_names;

  int num_classes() const { return static_cast<int>(class_names.size()); }
  std::size_t size() const { return entries.size(); }
};

// Each immediate subdirectory of root is a class named by its directory,
// sorted lexicographically to fix class indices; files with a registered
// image extension are listed in sorted order. Empty class directories are
// excluded with a warning.
DatasetIndex index_dataset(const std::filesystem::path& root,
                           const WarnFn& warn = warn_to_stderr);

// Stratified split: per class, ceil(val_fraction * n) samples go to the
// validation side via a seed-derived shuffle. Disjoint and exhaustive.
struct SplitResult {
  DatasetIndex train;
  DatasetIndex val;
};
SplitResult split(const DatasetIndex& index, double val_fraction, std::uint64_t seed);

// One `path<TAB>class_name` line per entry.
void write_manifest(const DatasetIndex& index, const std::filesystem::path& out);

// ---------------------------------------------------------------------------
// Sample access

// Uniform view over labeled samples; dataset-backed implementations decode
// lazily, in-memory ones serve synthetic tensors for tests.
class SampleSet {
public:
  virtual ~SampleSet() = default;
  virtual std::size_t size() const = 0;
  virtual ImageSample get(std::size_t i) const = 0;
};

class IndexedSampleSet final : public SampleSet {
public:
  explicit IndexedSampleSet(DatasetIndex index) : index_(std::move(index)) {}
  std::size_t size() const override { return index_.size(); }
  ImageSample get(std::size_t i) const override;
  const DatasetIndex& index() const { return index_; }

private:
  DatasetIndex index_;
};

class MemorySampleSet final : public SampleSet {
public:
  explicit MemorySampleSet(std::vector<ImageSample> samples)
      : samples_(std::move(samples)) {}
  std::size_t size() const override { return samples_.size(); }
  ImageSample get(std::size_t i) const override { return samples_.at(i); }

private:
  std::vector<ImageSample> samples_;
};

// Deterministic epoch-specific sample order: same (seed, epoch) reproduces
// the permutation, different epochs draw fresh ones.
std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed,
                                        std::uint64_t epoch);

// Iterates index batches over a shuffled epoch; the final short batch is
// kept. Samples are fetched by the consumer, keeping loading lazy.
class BatchStream {
public:
  BatchStream(std::size_t n, std::size_t batch_size, std::uint64_t seed,
              std::uint64_t epoch);
  // Indices of the next batch, or nullopt at end of epoch.
  std::optional<std::vector<std::size_t>> next();

private:
  std::vector<std::size_t> order_;
  std::size_t batch_size_;
  std::size_t pos_ = 0;
};

}  // namespace torsonet
