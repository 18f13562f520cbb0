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

#include "fixedhead/heads.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "fixedhead/errors.hpp"
#include "fixedhead/hadamard.hpp"
#include "fixedhead/init.hpp"
#include "fixedhead/linalg.hpp"
#include "fixedhead/ops.hpp"

namespace fixedhead {

std::string_view head_kind_name(HeadKind kind) {
  switch (kind) {
    case HeadKind::Learned: return "Learned";
    case HeadKind::FixedOrthogonal: return "FixedOrthogonal";
    case HeadKind::FixedHadamard: return "FixedHadamard";
    case HeadKind::FixedIdentity: return "FixedIdentity";
  }
  return "?";
}

HeadKind parse_head_kind(std::string_view name) {
  for (HeadKind k : kAllHeadKinds) {
    if (head_kind_name(k) == name) return k;
  }
  throw ConfigError("unknown head kind '" + std::string(name) +
                    "' (expected Learned, FixedOrthogonal, FixedHadamard or FixedIdentity)");
}

bool is_fixed(HeadKind kind) { return kind != HeadKind::Learned; }

std::vector<Parameter*> Head::parameters() {
  std::vector<Parameter*> out{&weight};
  if (bias) out.push_back(&*bias);
  if (alpha) out.push_back(&*alpha);
  return out;
}

namespace {

Tensor orthogonal_weight(std::size_t n_c, std::size_t k, Rng& rng) {
  const std::size_t order = std::max(n_c, k);
  const auto qr = linalg::householder_qr(randn({order, order}, rng));
  // K >= n_c: all K rows, first n_c columns -> orthonormal columns.
  // K <= n_c: first K rows of an n_c x n_c Q -> orthonormal rows.
  return linalg::block(qr.q, k, n_c);
}

Tensor hadamard_weight(std::size_t n_c, std::size_t k) {
  const IntMatrix h = hadamard_matrix(hadamard_order_for(n_c, k));
  Tensor w({k, n_c});
  const double s = 1.0 / std::sqrt(static_cast<double>(n_c));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < n_c; ++j) w.at(i, j) = static_cast<double>(h(i, j)) * s;
  return w;
}

}  // namespace

BuiltHead build_head(HeadKind kind, std::size_t n_c, std::size_t num_classes, Rng& rng) {
  if (n_c == 0 || num_classes == 0) throw DimensionError("head dimensions must be positive");
  Head h;
  h.kind = kind;
  h.n_c = n_c;
  h.num_classes = num_classes;
  const Shape wshape{num_classes, n_c};
  switch (kind) {
    case HeadKind::Learned:
      h.weight = Parameter("head.weight", he_normal(wshape, n_c, rng), true);
      h.bias = Parameter("head.bias", Tensor({num_classes}), true);
      break;
    case HeadKind::FixedOrthogonal:
      h.weight = Parameter("head.weight", orthogonal_weight(n_c, num_classes, rng), false);
      h.bias = Parameter("head.bias", Tensor({num_classes}), true);
      break;
    case HeadKind::FixedHadamard:
      h.weight = Parameter("head.weight", hadamard_weight(n_c, num_classes), false);
      h.bias = Parameter("head.bias", Tensor({num_classes}), true);
      h.alpha = Parameter("head.alpha", Tensor::scalar(1.0), true);
      break;
    case HeadKind::FixedIdentity:
      if (n_c != num_classes) {
        throw DimensionError("identity head needs as many feature channels as classes (n_c=" +
                             std::to_string(n_c) + ", K=" + std::to_string(num_classes) + ")");
      }
      h.weight = Parameter("head.weight", linalg::identity(num_classes), false);
      break;
  }
  HeadReport report = analyze_head(h);
  return {std::move(h), std::move(report)};
}

HeadReport analyze_head(const Head& head) {
  HeadReport r;
  r.trainable_param_count = trainable_params(head);
  r.stored_param_count = stored_params(head);
  if (head.kind != HeadKind::FixedIdentity) {
    r.duplicate_pairs = detect_duplicate_rows(head.weight.value);
    r.duplicate_row_count = duplicate_row_count(r.duplicate_pairs);
  }
  return r;
}

Var head_forward(Tape& tape, Head& head, Var x) {
  if (x.shape().size() != 2 || x.shape()[1] != head.n_c) {
    throw ShapeError("head expects [N x " + std::to_string(head.n_c) + "] input, got " +
                     shape_string(x.shape()));
  }
  if (head.kind == HeadKind::FixedIdentity) return x;

  Var w = tape.param(head.weight);
  Var y = matmul(x, transpose(w));
  if (head.alpha) y = scale(y, tape.param(*head.alpha));
  if (head.bias) y = add_bias(y, tape.param(*head.bias));
  return y;
}

std::vector<DuplicatePair> detect_duplicate_rows(const Tensor& w) {
  if (w.rank() != 2) throw ShapeError("detect_duplicate_rows expects a matrix");
  const std::size_t rows = w.dim(0), cols = w.dim(1);
  std::map<std::vector<double>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < rows; ++i) {
    auto row = w.data().subspan(i * cols, cols);
    groups[std::vector<double>(row.begin(), row.end())].push_back(i);
  }
  std::vector<DuplicatePair> pairs;
  for (const auto& [row, idx] : groups) {
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = a + 1; b < idx.size(); ++b) pairs.push_back({idx[a], idx[b]});
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

std::size_t duplicate_row_count(const std::vector<DuplicatePair>& pairs) {
  std::set<std::size_t> later;
  for (const auto& p : pairs) later.insert(p.second);
  return later.size();
}

std::string format_pairs_one_based(const std::vector<DuplicatePair>& pairs, std::size_t limit) {
  std::ostringstream os;
  for (std::size_t i = 0; i < pairs.size() && i < limit; ++i) {
    os << (i ? ", " : "") << '(' << pairs[i].first + 1 << ", " << pairs[i].second + 1 << ')';
  }
  if (pairs.size() > limit) os << ", ...";
  return os.str();
}

std::size_t trainable_params(const Head& head) {
  const std::size_t k = head.num_classes, n = head.n_c;
  switch (head.kind) {
    case HeadKind::Learned: return k * n + k;
    case HeadKind::FixedOrthogonal: return k;
    case HeadKind::FixedHadamard: return k + 1;
    case HeadKind::FixedIdentity: return 0;
  }
  return 0;
}

std::size_t stored_params(const Head& head) {
  const std::size_t k = head.num_classes, n = head.n_c;
  switch (head.kind) {
    case HeadKind::Learned:
    case HeadKind::FixedOrthogonal: return k * n + k;
    case HeadKind::FixedHadamard: return k * n + k + 1;
    case HeadKind::FixedIdentity: return 0;
  }
  return 0;
}

}  // namespace fixedhead
