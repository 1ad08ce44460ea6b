// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mtbias Authors

#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <unistd.h>

#include "mtbias/types.hpp"

namespace mtbias::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("mtbias-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& p) const { return path_ / p; }

 private:
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

/// Sample set with the given labels; log-probs and texts are placeholders.
inline SampleSet labelled_set(const std::vector<GenderLabel>& labels, const std::string& id = "x") {
  SampleSet s;
  s.instance_id = id;
  s.model_id = "m";
  s.language = "es";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    s.samples.push_back({"t" + std::to_string(i), -1.0, {}, labels[i]});
  }
  s.sampling_meta.num_samples = labels.size();
  return s;
}

inline ClusterAssignment sizes_to_assignment(const std::vector<std::size_t>& sizes) {
  ClusterAssignment a;
  for (std::size_t c = 0; c < sizes.size(); ++c) a.cluster_of.insert(a.cluster_of.end(), sizes[c], c);
  a.num_clusters = sizes.size();
  return a;
}

}  // namespace mtbias::testing
