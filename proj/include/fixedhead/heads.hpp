/*
 * Copyright 2026 The fixedhead Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <array>
#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fixedhead/autodiff.hpp"

namespace fixedhead {

enum class HeadKind { Learned, FixedOrthogonal, FixedHadamard, FixedIdentity };

inline constexpr std::array<HeadKind, 4> kAllHeadKinds = {
    HeadKind::Learned, HeadKind::FixedOrthogonal, HeadKind::FixedHadamard, HeadKind::FixedIdentity};

/// "Learned", "FixedOrthogonal", "FixedHadamard", "FixedIdentity".
std::string_view head_kind_name(HeadKind kind);
/// Inverse of head_kind_name; throws ConfigError for anything else.
HeadKind parse_head_kind(std::string_view name);

bool is_fixed(HeadKind kind);

// Output classifier mapping pooled features x[N x n_c] to logits[N x K].
// W is stored K x n_c (one row per class).
//
//   Learned          y = x W^T + b          W, b trained
//   FixedOrthogonal  y = x W^T + b          W fixed (semi-)orthogonal, b trained
//   FixedHadamard    y = alpha x W^T + b    W fixed +-1/sqrt(n_c), alpha and b trained
//   FixedIdentity    y = x                  requires n_c == K, nothing trained
struct Head {
  HeadKind kind = HeadKind::Learned;
  std::size_t n_c = 0;
  std::size_t num_classes = 0;
  Parameter weight;
  std::optional<Parameter> bias;
  std::optional<Parameter> alpha;

  std::vector<Parameter*> parameters();
};

// Row pair (first < second), 0-indexed.
struct DuplicatePair {
  std::size_t first = 0;
  std::size_t second = 0;
  auto operator<=>(const DuplicatePair&) const = default;
};

struct HeadReport {
  std::size_t trainable_param_count = 0;
  /// Values that must be kept to run the head, fixed or not.
  std::size_t stored_param_count = 0;
  /// Rows identical to some earlier row.
  std::size_t duplicate_row_count = 0;
  std::vector<DuplicatePair> duplicate_pairs;
};

struct BuiltHead {
  Head head;
  HeadReport report;
};

/// Constructs a head. Fixed orthogonal weights come from the Householder QR
/// of a random square matrix of order max(n_c, K) cut to K x n_c; Hadamard
/// weights from the Sylvester matrix of order 2^ceil(log2 max(n_c, K)) cut to
/// K x n_c and scaled by 1/sqrt(n_c). Throws DimensionError for an identity
/// head with n_c != K.
BuiltHead build_head(HeadKind kind, std::size_t n_c, std::size_t num_classes, Rng& rng);

HeadReport analyze_head(const Head& head);

Var head_forward(Tape& tape, Head& head, Var x);

/// All pairs of exactly equal rows, in lexicographic order.
std::vector<DuplicatePair> detect_duplicate_rows(const Tensor& w);

/// Number of rows equal to an earlier row, given the pairs of one matrix.
std::size_t duplicate_row_count(const std::vector<DuplicatePair>& pairs);

/// "(1, 513), (2, 514), ..." using 1-based row numbers, at most `limit` pairs.
std::string format_pairs_one_based(const std::vector<DuplicatePair>& pairs, std::size_t limit);

std::size_t trainable_params(const Head& head);
std::size_t stored_params(const Head& head);

}  // namespace fixedhead
