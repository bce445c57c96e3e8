#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "padapt/matrix.hpp"

namespace padapt {

enum class TaskKind { kCopyShift, kCrossLookup, kHeterophilicLookup };

std::string to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string& s);

// Width of the key segment in the raw encoder features. Raw rows are laid
// out as [vocab one-hot | key vector].
inline constexpr std::size_t kKeyDim = 16;

struct TaskSpec {
  TaskKind kind = TaskKind::kCopyShift;
  std::size_t length = 12;   // decoder sequence length
  std::size_t vocab = 64;
  std::size_t n_train = 256;
  std::size_t n_eval = 64;
  std::uint64_t seed = 1;
  std::size_t shift = 1;     // copy_shift displacement
  std::size_t n_keys = 8;    // lookup tasks: encoder key count
  std::size_t n_classes = 8; // lookup tasks: target classes (< vocab)

  void validate() const;
  std::size_t enc_rows() const {
    return kind == TaskKind::kCopyShift ? length : n_keys;
  }
  std::size_t enc_raw_dim() const { return vocab + kKeyDim; }
};

struct Sample {
  std::vector<int> tokens;
  std::vector<int> targets;
  Matrix enc_raw;  // enc_rows x (vocab + kKeyDim)
};

struct Dataset {
  TaskSpec spec;
  std::vector<Sample> train;
  std::vector<Sample> eval_set;
};

// Deterministic per seed; train and eval sets are disjoint by construction
// (eval candidates colliding with a train sample are redrawn).
Dataset generate_task(const TaskSpec& spec);

}  // namespace padapt
