#include "torsonet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "torsonet/rng.hpp"

namespace torsonet {

namespace {

std::string lower_ext(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return ext;
}

void fisher_yates(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng.bounded(i)]);
  }
}

}  // namespace

DatasetIndex index_dataset(const std::filesystem::path& root, const WarnFn& warn) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw IoError("dataset root is not a readable directory: " + root.string());
  }

  std::vector<fs::path> class_dirs;
  try {
    for (const auto& entry : fs::directory_iterator(root)) {
      if (entry.is_directory()) class_dirs.push_back(entry.path());
    }
  } catch (const fs::filesystem_error& e) {
    throw IoError("cannot scan dataset root: " + std::string(e.what()));
  }
  std::sort(class_dirs.begin(), class_dirs.end(),
            [](const fs::path& a, const fs::path& b) {
              return a.filename().string() < b.filename().string();
            });

  DatasetIndex index;
  for (const fs::path& dir : class_dirs) {
    std::vector<fs::path> files;
    try {
      for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && decoder_available(lower_ext(entry.path()))) {
          files.push_back(entry.path());
        }
      }
    } catch (const fs::filesystem_error& e) {
      throw IoError("cannot scan class directory: " + std::string(e.what()));
    }
    if (files.empty()) {
      warn("class directory '" + dir.filename().string() +
           "' has no readable images; excluded");
      continue;
    }
    std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
      return a.string() < b.string();
    });
    const int class_index = static_cast<int>(index.class_names.size());
    index.class_names.push_back(dir.filename().string());
    for (fs::path& f : files) {
      index.entries.push_back({std::move(f), class_index});
    }
  }

  if (index.class_names.size() < 2) {
    throw DataError("dataset needs at least 2 non-empty class directories, found " +
                    std::to_string(index.class_names.size()));
  }
  return index;
}

SplitResult split(const DatasetIndex& index, double val_fraction, std::uint64_t seed) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw ArgumentError("val_fraction must be in (0, 1)");
  }

  std::vector<std::vector<std::size_t>> per_class(index.class_names.size());
  for (std::size_t i = 0; i < index.entries.size(); ++i) {
    per_class[index.entries[i].class_index].push_back(i);
  }

  std::set<std::size_t> val_set;
  for (std::size_t k = 0; k < per_class.size(); ++k) {
    auto& members = per_class[k];
    if (members.size() < 2) {
      throw DataError("class '" + index.class_names[k] +
                      "' has fewer than 2 samples; cannot split");
    }
    const auto n_val = static_cast<std::size_t>(
        std::ceil(val_fraction * static_cast<double>(members.size())));
    Rng rng(Rng::mix(seed, k));
    fisher_yates(members, rng);
    for (std::size_t i = 0; i < n_val; ++i) val_set.insert(members[i]);
  }

  SplitResult result;
  result.train.class_names = index.class_names;
  result.val.class_names = index.class_names;
  for (std::size_t i = 0; i < index.entries.size(); ++i) {
    (val_set.count(i) ? result.val : result.train).entries.push_back(index.entries[i]);
  }
  return result;
}

void write_manifest(const DatasetIndex& index, const std::filesystem::path& out) {
  std::ofstream os(out, std::ios::trunc);
  if (!os) throw IoError("cannot open manifest for writing: " + out.string());
  for (const auto& entry : index.entries) {
    os << entry.path.string() << "\t" << index.class_names[entry.class_index] << "\n";
  }
  if (!os) throw IoError("manifest write failed: " + out.string());
}

ImageSample IndexedSampleSet::get(std::size_t i) const {
  const auto& entry = index_.entries.at(i);
  try {
    return load_sample(entry.path, entry.class_index);
  } catch (const DataError&) {
    throw;
  } catch (const Error& e) {
    throw DataError(std::string(e.what()) + " (while loading " + entry.path.string() +
                    ")");
  }
}

std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed,
                                        std::uint64_t epoch) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(Rng::mix(seed, 0x51FFULL, epoch));
  fisher_yates(order, rng);
  return order;
}

BatchStream::BatchStream(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                         std::uint64_t epoch)
    : order_(shuffled_order(n, seed, epoch)), batch_size_(batch_size) {
  if (batch_size_ < 1) throw ArgumentError("batch_size must be >= 1");
}

std::optional<std::vector<std::size_t>> BatchStream::next() {
  if (pos_ >= order_.size()) return std::nullopt;
  const std::size_t end = std::min(pos_ + batch_size_, order_.size());
  std::vector<std::size_t> batch(order_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                 order_.begin() + static_cast<std::ptrdiff_t>(end));
  pos_ = end;
  return batch;
}

}  // namespace torsonet
