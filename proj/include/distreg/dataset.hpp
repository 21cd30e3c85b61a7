#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "distreg/common.hpp"

namespace distreg {

/// Columnar data: real-valued columns plus label columns (categorical or
/// region identifiers). All columns share the same length.
class Dataset {
public:
  Index n() const { return n_; }

  void add_real(const std::string& name, Vector values) {
    check_length(name, values.size());
    if (!values.allFinite()) throw DataError("column '" + name + "' contains non-finite values");
    reals_[name] = std::move(values);
  }

  void add_labels(const std::string& name, std::vector<std::string> values) {
    check_length(name, static_cast<Index>(values.size()));
    for (const auto& v : values) {
      if (v.empty()) throw DataError("column '" + name + "' contains missing values");
    }
    labels_[name] = std::move(values);
  }

  bool has_real(const std::string& name) const { return reals_.count(name) > 0; }
  bool has_labels(const std::string& name) const { return labels_.count(name) > 0; }

  const Vector& real(const std::string& name) const {
    auto it = reals_.find(name);
    if (it == reals_.end()) {
      if (labels_.count(name)) {
        throw DataError("column '" + name + "' is categorical but a numeric column is required");
      }
      throw DataError("unknown column '" + name + "'");
    }
    return it->second;
  }

  const std::vector<std::string>& labels(const std::string& name) const {
    auto it = labels_.find(name);
    if (it == labels_.end()) {
      if (reals_.count(name)) {
        throw DataError("column '" + name + "' is numeric but a categorical column is required");
      }
      throw DataError("unknown column '" + name + "'");
    }
    return it->second;
  }

  std::vector<std::string> real_names() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : reals_) out.push_back(k);
    return out;
  }

  Dataset subset(const std::vector<Index>& rows) const {
    Dataset out;
    for (const auto& [name, col] : reals_) {
      Vector v(static_cast<Index>(rows.size()));
      for (size_t i = 0; i < rows.size(); ++i) v[static_cast<Index>(i)] = col[rows[i]];
      out.add_real(name, std::move(v));
    }
    for (const auto& [name, col] : labels_) {
      std::vector<std::string> v(rows.size());
      for (size_t i = 0; i < rows.size(); ++i) v[i] = col[static_cast<size_t>(rows[i])];
      out.add_labels(name, std::move(v));
    }
    return out;
  }

private:
  void check_length(const std::string& name, Index len) {
    if (n_ < 0) {
      n_ = len;
    } else if (len != n_) {
      throw DataError("column '" + name + "' has length " + std::to_string(len) +
                      ", expected " + std::to_string(n_));
    }
    if (reals_.count(name) || labels_.count(name)) {
      throw DataError("duplicate column '" + name + "'");
    }
  }

  Index n_ = -1;
  std::map<std::string, Vector> reals_;
  std::map<std::string, std::vector<std::string>> labels_;
};

/// Region neighbourhood structure: an ordered region list with symmetric
/// neighbour sets. Islands (no neighbours) are permitted and flagged.
class AdjacencyMap {
public:
  AdjacencyMap() = default;

  AdjacencyMap(std::vector<std::string> regions,
               std::vector<std::vector<std::string>> neighbor_labels) {
    regions_ = std::move(regions);
    for (size_t i = 0; i < regions_.size(); ++i) {
      if (!index_.emplace(regions_[i], static_cast<int>(i)).second) {
        throw DataError("duplicate region '" + regions_[i] + "' in adjacency map");
      }
    }
    neighbors_.resize(regions_.size());
    for (size_t i = 0; i < regions_.size(); ++i) {
      std::set<int> nb;
      for (const auto& lbl : neighbor_labels[i]) {
        auto it = index_.find(lbl);
        if (it == index_.end()) {
          throw DataError("region '" + regions_[i] + "' lists unknown neighbour '" + lbl + "'");
        }
        if (it->second == static_cast<int>(i)) {
          throw DataError("region '" + regions_[i] + "' lists itself as a neighbour");
        }
        nb.insert(it->second);
      }
      neighbors_[i].assign(nb.begin(), nb.end());
    }
    for (size_t s = 0; s < regions_.size(); ++s) {
      for (int r : neighbors_[s]) {
        const auto& back = neighbors_[static_cast<size_t>(r)];
        if (!std::binary_search(back.begin(), back.end(), static_cast<int>(s))) {
          throw DataError("asymmetric adjacency between '" + regions_[s] + "' and '" +
                          regions_[static_cast<size_t>(r)] + "'");
        }
      }
    }
  }

  int size() const { return static_cast<int>(regions_.size()); }
  const std::vector<std::string>& regions() const { return regions_; }
  const std::vector<int>& neighbors(int s) const { return neighbors_[static_cast<size_t>(s)]; }
  int degree(int s) const { return static_cast<int>(neighbors_[static_cast<size_t>(s)].size()); }
  bool is_island(int s) const { return degree(s) == 0; }

  int index_of(const std::string& label) const {
    auto it = index_.find(label);
    if (it == index_.end()) throw DataError("unknown region label '" + label + "'");
    return it->second;
  }
  bool contains(const std::string& label) const { return index_.count(label) > 0; }

  /// Number of connected components of the neighbourhood graph.
  int component_count() const {
    const int s = size();
    std::vector<int> comp(static_cast<size_t>(s), -1);
    int count = 0;
    for (int start = 0; start < s; ++start) {
      if (comp[static_cast<size_t>(start)] >= 0) continue;
      ++count;
      std::vector<int> stack{start};
      comp[static_cast<size_t>(start)] = count;
      while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int r : neighbors(v)) {
          if (comp[static_cast<size_t>(r)] < 0) {
            comp[static_cast<size_t>(r)] = count;
            stack.push_back(r);
          }
        }
      }
    }
    return count;
  }

private:
  std::vector<std::string> regions_;
  std::map<std::string, int> index_;
  std::vector<std::vector<int>> neighbors_;
};

}  // namespace distreg
