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

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

namespace fixedhead::arch {

struct ConvSpec {
  std::size_t c_in = 0;
  std::size_t c_out = 0;
  std::size_t kh = 1;
  std::size_t kw = 1;
  std::size_t stride = 1;
  std::size_t groups = 1;
  bool bias = false;
};

struct BatchNormSpec {
  std::size_t c = 0;
};

struct FcSpec {
  std::size_t n_in = 0;
  std::size_t n_out = 0;
  bool bias = true;
};

struct GlobalAvgPoolSpec {};

struct PoolSpec {
  std::string kind = "max";
  std::size_t k = 2;
  std::size_t stride = 2;
};

struct ActivationSpec {
  std::string fn = "relu";
};

// Keeps the first `channels` channels; parameter free.
struct SliceSpec {
  std::size_t channels = 0;
};

struct LayerSpec;

enum class Merge { Add, Concat };

// Two parallel paths joined by addition or channel concatenation. An empty
// shortcut is the identity. With `split`, each path receives half of the
// input channels (channel split before concatenation).
struct ResidualSpec {
  std::vector<LayerSpec> branch;
  std::vector<LayerSpec> shortcut;
  Merge merge = Merge::Add;
  bool split = false;
};

struct LayerSpec {
  using Variant = std::variant<ConvSpec, BatchNormSpec, FcSpec, GlobalAvgPoolSpec, PoolSpec,
                               ActivationSpec, SliceSpec, ResidualSpec>;
  Variant layer;

  template <typename T>
    requires(!std::is_same_v<std::decay_t<T>, LayerSpec> && std::is_constructible_v<Variant, T>)
  LayerSpec(T v) : layer(std::move(v)) {}  // NOLINT(google-explicit-constructor)

  template <typename T>
  bool is() const { return std::holds_alternative<T>(layer); }
  template <typename T>
  const T& as() const { return std::get<T>(layer); }
  template <typename T>
  T& as() { return std::get<T>(layer); }
};

struct ArchitectureSpec {
  std::string name;
  std::size_t num_classes = 0;
  /// Channels entering global average pooling.
  std::size_t feature_dim = 0;
  std::size_t input_channels = 3;
  std::vector<LayerSpec> layers;
};

struct AuditReport {
  std::size_t total_params = 0;
  std::size_t classifier_params = 0;
  std::size_t feature_params = 0;
  double classifier_fraction = 0.0;
  std::optional<double> savings_vs_baseline;
};

/// Learnable parameters of one layer (BatchNorm counts scale and shift only).
std::size_t count_layer_params(const LayerSpec& layer);

/// Checks channel chaining and structural rules; throws SpecError naming the
/// offending layer path (e.g. "layers[12].branch[3]").
void validate(const ArchitectureSpec& spec);

/// Residual blocks replaced by their branch followed by their shortcut.
std::vector<LayerSpec> flatten(const std::vector<LayerSpec>& layers);

/// Validates, then splits the count into trailing classifier and features.
AuditReport count_total(const ArchitectureSpec& spec);

/// (baseline.total - variant.total) / baseline.total.
double savings(const AuditReport& baseline, const AuditReport& variant);

/// Same network with the trailing classifier resized to K outputs.
ArchitectureSpec with_num_classes(ArchitectureSpec spec, std::size_t num_classes);

/// Removes the trailing FC and narrows the last convolution to K channels,
/// together with the BatchNorm that follows it. When that convolution ends a
/// residual branch, the shortcut is narrowed too: a projection shortcut gets
/// K output channels, an identity shortcut keeps its first K channels.
/// Throws DimensionError when K exceeds feature_dim.
ArchitectureSpec headless_transform(const ArchitectureSpec& spec, std::size_t num_classes);

/// Parses the JSON description format (schema 1). Throws ParseError with the
/// field path or line number, SpecError for inconsistent channel counts.
ArchitectureSpec parse_spec(const std::string& text, const std::string& source = "<memory>");
ArchitectureSpec load_spec(const std::filesystem::path& path);
std::string to_json(const ArchitectureSpec& spec);

}  // namespace fixedhead::arch
