#include "padapt/tasks.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "padapt/rng.hpp"

namespace padapt {

std::string to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::kCopyShift: return "copy_shift";
    case TaskKind::kCrossLookup: return "cross_lookup";
    case TaskKind::kHeterophilicLookup: return "heterophilic_lookup";
  }
  return "?";
}

TaskKind task_kind_from_string(const std::string& s) {
  if (s == "copy_shift") return TaskKind::kCopyShift;
  if (s == "cross_lookup") return TaskKind::kCrossLookup;
  if (s == "heterophilic_lookup") return TaskKind::kHeterophilicLookup;
  throw std::invalid_argument("unknown task kind: " + s);
}

void TaskSpec::validate() const {
  if (length == 0) throw std::invalid_argument("task: length must be >= 1");
  if (vocab < 2) throw std::invalid_argument("task: vocab must be >= 2");
  if (n_train == 0 || n_eval == 0) throw std::invalid_argument("task: set sizes must be >= 1");
  if (kind != TaskKind::kCopyShift) {
    if (n_keys == 0) throw std::invalid_argument("task: n_keys must be >= 1");
    if (n_classes == 0 || n_classes > vocab) {
      throw std::invalid_argument("task: n_classes must be in [1, vocab]");
    }
  }
  if (kind == TaskKind::kCopyShift && shift >= length) {
    throw std::invalid_argument("task: shift must be < length");
  }
}

namespace {

// Fingerprint used only for the train/eval disjointness guarantee; float
// coordinates are quantized so re-generated duplicates collide reliably.
std::string sample_key(const Sample& s) {
  std::string key;
  for (int t : s.tokens) key += std::to_string(t) + ",";
  key += "|";
  for (int t : s.targets) key += std::to_string(t) + ",";
  key += "|";
  for (std::size_t i = 0; i < s.enc_raw.size(); ++i) {
    key += std::to_string(static_cast<long long>(std::llround(s.enc_raw.data()[i] * 1e9)));
    key += ",";
  }
  return key;
}

struct LookupTables {
  Matrix query_table;  // vocab x kKeyDim, fixed per dataset
  Matrix prototypes;   // n_classes x kKeyDim, heterophilic targets
};

Sample make_copy_shift(const TaskSpec& spec, Rng& rng) {
  Sample s;
  s.tokens.resize(spec.length);
  for (auto& t : s.tokens) t = static_cast<int>(rng.uniform_int(spec.vocab));
  s.targets.resize(spec.length);
  for (std::size_t i = 0; i < spec.length; ++i)
    s.targets[i] = s.tokens[(i + spec.shift) % spec.length];
  // Encoder carries the source sequence: token one-hot plus a position tag
  // in the key segment, so cross-attention can resolve shifted positions.
  s.enc_raw = Matrix(spec.length, spec.enc_raw_dim());
  for (std::size_t i = 0; i < spec.length; ++i) {
    s.enc_raw(i, s.tokens[i]) = 1.0;
    s.enc_raw(i, spec.vocab + (i % kKeyDim)) = 1.0;
  }
  return s;
}

std::size_t nearest_key(const Matrix& keys, const double* query, std::size_t dim) {
  std::size_t best = 0;
  double best_dist = 0.0;
  for (std::size_t j = 0; j < keys.rows(); ++j) {
    double dist = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      const double c = keys(j, k) - query[k];
      dist += c * c;
    }
    if (j == 0 || dist < best_dist) {
      best_dist = dist;
      best = j;
    }
  }
  return best;
}

Sample make_lookup(const TaskSpec& spec, const LookupTables& tables, Rng& rng) {
  Sample s;
  Matrix keys = rng.normal_matrix(spec.n_keys, kKeyDim);
  std::vector<int> classes(spec.n_keys);
  for (auto& c : classes) c = static_cast<int>(rng.uniform_int(spec.n_classes));

  s.enc_raw = Matrix(spec.n_keys, spec.enc_raw_dim());
  for (std::size_t j = 0; j < spec.n_keys; ++j) {
    if (spec.kind == TaskKind::kCrossLookup) s.enc_raw(j, classes[j]) = 1.0;
    for (std::size_t k = 0; k < kKeyDim; ++k) s.enc_raw(j, spec.vocab + k) = keys(j, k);
  }

  s.tokens.resize(spec.length);
  for (auto& t : s.tokens) t = static_cast<int>(rng.uniform_int(spec.vocab));
  s.targets.resize(spec.length);
  for (std::size_t i = 0; i < spec.length; ++i) {
    const double* query = tables.query_table.data() + s.tokens[i] * kKeyDim;
    const std::size_t j = nearest_key(keys, query, kKeyDim);
    if (spec.kind == TaskKind::kCrossLookup) {
      s.targets[i] = classes[j];
    } else {
      // Class is a function of the matched-key / query disparity, so the
      // label signal lives across the two feature spaces.
      std::vector<double> diff(kKeyDim);
      for (std::size_t k = 0; k < kKeyDim; ++k) diff[k] = keys(j, k) - query[k];
      s.targets[i] =
          static_cast<int>(nearest_key(tables.prototypes, diff.data(), kKeyDim));
    }
  }
  return s;
}

Sample make_sample(const TaskSpec& spec, const LookupTables& tables, Rng& rng) {
  if (spec.kind == TaskKind::kCopyShift) return make_copy_shift(spec, rng);
  return make_lookup(spec, tables, rng);
}

}  // namespace

Dataset generate_task(const TaskSpec& spec) {
  spec.validate();
  Dataset data;
  data.spec = spec;
  Rng rng(spec.seed);

  LookupTables tables;
  if (spec.kind != TaskKind::kCopyShift) {
    tables.query_table = rng.normal_matrix(spec.vocab, kKeyDim);
    tables.prototypes = rng.normal_matrix(spec.n_classes, kKeyDim);
  }

  std::unordered_set<std::string> seen;
  auto draw_unique = [&](std::vector<Sample>& out, std::size_t count) {
    std::size_t attempts = 0;
    while (out.size() < count) {
      Sample s = make_sample(spec, tables, rng);
      if (seen.insert(sample_key(s)).second) {
        out.push_back(std::move(s));
      } else if (++attempts > 100 * count + 1000) {
        throw std::runtime_error("generate_task: sample space too small for disjoint sets");
      }
    }
  };
  draw_unique(data.train, spec.n_train);
  draw_unique(data.eval_set, spec.n_eval);
  return data;
}

}  // namespace padapt
