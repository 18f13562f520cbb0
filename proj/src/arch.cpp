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

#include "fixedhead/arch.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fixedhead/errors.hpp"

namespace fixedhead::arch {

namespace {

using nlohmann::json;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

// Returns the channel count leaving `layers` given `c` entering.
std::size_t chain(const std::vector<LayerSpec>& layers, std::size_t c, const std::string& path) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string where = at(path, i);
    c = std::visit(
        overloaded{
            [&](const ConvSpec& l) {
              if (l.c_in == 0 || l.c_out == 0 || l.kh == 0 || l.kw == 0 || l.stride == 0 || l.groups == 0)
                throw SpecError(where + ": conv dimensions must be positive");
              if (l.c_in != c)
                throw SpecError(where + ": conv expects " + std::to_string(l.c_in) + " input channels but receives " +
                                std::to_string(c));
              if (l.c_in % l.groups != 0 || l.c_out % l.groups != 0)
                throw SpecError(where + ": conv channels not divisible by groups " + std::to_string(l.groups));
              return l.c_out;
            },
            [&](const BatchNormSpec& l) {
              if (l.c != c)
                throw SpecError(where + ": batchnorm width " + std::to_string(l.c) + " but receives " +
                                std::to_string(c) + " channels");
              return c;
            },
            [&](const FcSpec&) -> std::size_t {
              throw SpecError(where + ": fully connected layer must follow global average pooling");
            },
            [&](const GlobalAvgPoolSpec&) -> std::size_t {
              throw SpecError(where + ": global average pooling inside a block");
            },
            [&](const PoolSpec&) { return c; },
            [&](const ActivationSpec&) { return c; },
            [&](const SliceSpec& l) {
              if (l.channels == 0 || l.channels > c)
                throw SpecError(where + ": slice of " + std::to_string(l.channels) + " from " + std::to_string(c) +
                                " channels");
              return l.channels;
            },
            [&](const ResidualSpec& l) {
              std::size_t in = c;
              if (l.split) {
                if (c % 2 != 0) throw SpecError(where + ": channel split of odd width " + std::to_string(c));
                in = c / 2;
              }
              const std::size_t b = chain(l.branch, in, where + ".branch");
              const std::size_t s = chain(l.shortcut, in, where + ".shortcut");
              if (l.merge == Merge::Concat) return b + s;
              if (b != s)
                throw SpecError(where + ": branch yields " + std::to_string(b) + " channels, shortcut " +
                                std::to_string(s));
              return b;
            },
        },
        layers[i].layer);
  }
  return c;
}

std::size_t find_gap(const ArchitectureSpec& spec) {
  std::size_t gap = spec.layers.size();
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (!spec.layers[i].is<GlobalAvgPoolSpec>()) continue;
    if (gap != spec.layers.size()) throw SpecError(at("layers", i) + ": second global average pooling");
    gap = i;
  }
  if (gap == spec.layers.size()) throw SpecError(spec.name + ": no global average pooling layer");
  return gap;
}

}  // namespace

std::size_t count_layer_params(const LayerSpec& layer) {
  return std::visit(overloaded{
                        [](const ConvSpec& l) {
                          return (l.c_in / l.groups) * l.kh * l.kw * l.c_out + (l.bias ? l.c_out : 0);
                        },
                        [](const BatchNormSpec& l) { return 2 * l.c; },
                        [](const FcSpec& l) { return l.n_in * l.n_out + (l.bias ? l.n_out : 0); },
                        [](const ResidualSpec& l) {
                          std::size_t n = 0;
                          for (const auto& x : l.branch) n += count_layer_params(x);
                          for (const auto& x : l.shortcut) n += count_layer_params(x);
                          return n;
                        },
                        [](const auto&) { return std::size_t{0}; },
                    },
                    layer.layer);
}

void validate(const ArchitectureSpec& spec) {
  if (spec.num_classes == 0) throw SpecError(spec.name + ": num_classes must be positive");
  const std::size_t gap = find_gap(spec);
  const std::vector<LayerSpec> body(spec.layers.begin(), spec.layers.begin() + gap);
  const std::size_t c = chain(body, spec.input_channels, "layers");
  if (c != spec.feature_dim) {
    throw SpecError(spec.name + ": " + std::to_string(c) + " channels reach pooling but feature_dim is " +
                    std::to_string(spec.feature_dim));
  }
  const std::size_t tail = spec.layers.size() - gap - 1;
  if (tail > 1) throw SpecError(at("layers", gap + 2) + ": only one classifier layer may follow pooling");
  if (tail == 1) {
    const auto& last = spec.layers.back();
    if (!last.is<FcSpec>()) throw SpecError(at("layers", gap + 1) + ": expected a fully connected layer");
    const auto& fc = last.as<FcSpec>();
    if (fc.n_in != c)
      throw SpecError(at("layers", gap + 1) + ": fc expects " + std::to_string(fc.n_in) + " inputs but receives " +
                      std::to_string(c));
    if (fc.n_out != spec.num_classes)
      throw SpecError(at("layers", gap + 1) + ": fc has " + std::to_string(fc.n_out) + " outputs for " +
                      std::to_string(spec.num_classes) + " classes");
  } else if (c != spec.num_classes) {
    throw SpecError(spec.name + ": without a classifier the pooled width " + std::to_string(c) +
                    " must equal num_classes " + std::to_string(spec.num_classes));
  }
}

std::vector<LayerSpec> flatten(const std::vector<LayerSpec>& layers) {
  std::vector<LayerSpec> out;
  for (const auto& l : layers) {
    if (l.is<ResidualSpec>()) {
      for (auto& x : flatten(l.as<ResidualSpec>().branch)) out.push_back(std::move(x));
      for (auto& x : flatten(l.as<ResidualSpec>().shortcut)) out.push_back(std::move(x));
    } else {
      out.push_back(l);
    }
  }
  return out;
}

AuditReport count_total(const ArchitectureSpec& spec) {
  validate(spec);
  AuditReport r;
  for (const auto& l : spec.layers) r.total_params += count_layer_params(l);
  if (!spec.layers.empty() && spec.layers.back().is<FcSpec>()) {
    r.classifier_params = count_layer_params(spec.layers.back());
  }
  r.feature_params = r.total_params - r.classifier_params;
  r.classifier_fraction =
      r.total_params ? static_cast<double>(r.classifier_params) / static_cast<double>(r.total_params) : 0.0;
  return r;
}

double savings(const AuditReport& baseline, const AuditReport& variant) {
  if (baseline.total_params == 0) throw PreconditionError("savings: baseline has no parameters");
  return (static_cast<double>(baseline.total_params) - static_cast<double>(variant.total_params)) /
         static_cast<double>(baseline.total_params);
}

ArchitectureSpec with_num_classes(ArchitectureSpec spec, std::size_t num_classes) {
  if (spec.layers.empty() || !spec.layers.back().is<FcSpec>()) {
    if (spec.feature_dim != num_classes) {
      throw DimensionError(spec.name + " has no classifier layer; it only supports " +
                           std::to_string(spec.feature_dim) + " classes");
    }
  } else {
    spec.layers.back().as<FcSpec>().n_out = num_classes;
  }
  spec.num_classes = num_classes;
  validate(spec);
  return spec;
}

namespace {

// Narrows the last channel-producing layer of layers[0, end) to k channels.
// Returns the width that layer produced before the change.
std::size_t narrow_tail(std::vector<LayerSpec>& layers, std::size_t k, const std::string& path) {
  std::vector<BatchNormSpec*> trailing_bn;
  for (std::size_t i = layers.size(); i-- > 0;) {
    auto& l = layers[i];
    const std::string where = at(path, i);
    if (l.is<ActivationSpec>() || l.is<PoolSpec>()) continue;
    if (l.is<BatchNormSpec>()) {
      trailing_bn.push_back(&l.as<BatchNormSpec>());
      continue;
    }
    std::size_t old = 0;
    if (l.is<ConvSpec>()) {
      auto& conv = l.as<ConvSpec>();
      old = conv.c_out;
      if (old == k) return old;
      if (conv.groups != 1) throw SpecError(where + ": cannot narrow a grouped final convolution");
      conv.c_out = k;
    } else if (l.is<SliceSpec>()) {
      old = l.as<SliceSpec>().channels;
      l.as<SliceSpec>().channels = k;
    } else if (l.is<ResidualSpec>()) {
      auto& block = l.as<ResidualSpec>();
      if (block.merge != Merge::Add) throw SpecError(where + ": cannot narrow a concatenating block");
      old = narrow_tail(block.branch, k, where + ".branch");
      if (old == k) return old;
      if (block.shortcut.empty()) {
        block.shortcut.push_back(SliceSpec{k});
      } else {
        narrow_tail(block.shortcut, k, where + ".shortcut");
      }
    } else {
      throw SpecError(where + ": unexpected layer before pooling");
    }
    for (auto* bn : trailing_bn) bn->c = k;
    return old;
  }
  throw SpecError(path + ": no convolution to narrow");
}

}  // namespace

ArchitectureSpec headless_transform(const ArchitectureSpec& spec, std::size_t num_classes) {
  validate(spec);
  if (num_classes == 0 || num_classes > spec.feature_dim) {
    throw DimensionError("cannot remove the classifier of " + spec.name + ": " + std::to_string(num_classes) +
                         " classes exceed the " + std::to_string(spec.feature_dim) + " pooled channels");
  }
  ArchitectureSpec out = spec;
  if (out.layers.back().is<FcSpec>()) out.layers.pop_back();
  const std::size_t gap = find_gap(out);
  std::vector<LayerSpec> body(out.layers.begin(), out.layers.begin() + gap);
  narrow_tail(body, num_classes, "layers");
  std::copy(body.begin(), body.end(), out.layers.begin());
  out.feature_dim = num_classes;
  out.num_classes = num_classes;
  validate(out);
  return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

std::size_t line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

const json& field(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(path + ": missing field \"" + key + "\"");
  return *it;
}

std::size_t uint_field(const json& obj, const char* key, const std::string& path) {
  const json& v = field(obj, key, path);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw ParseError(path + "." + key + ": expected a non-negative integer");
  return v.get<std::size_t>();
}

std::size_t uint_or(const json& obj, const char* key, std::size_t fallback, const std::string& path) {
  return obj.contains(key) ? uint_field(obj, key, path) : fallback;
}

bool bool_or(const json& obj, const char* key, bool fallback, const std::string& path) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_boolean()) throw ParseError(path + "." + key + ": expected true or false");
  return obj[key].get<bool>();
}

std::string string_or(const json& obj, const char* key, std::string fallback, const std::string& path) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_string()) throw ParseError(path + "." + key + ": expected a string");
  return obj[key].get<std::string>();
}

std::vector<LayerSpec> parse_layers(const json& arr, const std::string& path);

LayerSpec parse_layer(const json& j, const std::string& path) {
  if (!j.is_object()) throw ParseError(path + ": expected an object");
  const json& t = field(j, "type", path);
  if (!t.is_string()) throw ParseError(path + ".type: expected a string");
  const std::string type = t.get<std::string>();
  if (type == "conv") {
    ConvSpec c;
    c.c_in = uint_field(j, "c_in", path);
    c.c_out = uint_field(j, "c_out", path);
    if (j.contains("k")) {
      c.kh = c.kw = uint_field(j, "k", path);
    } else {
      c.kh = uint_field(j, "kh", path);
      c.kw = uint_field(j, "kw", path);
    }
    c.stride = uint_or(j, "stride", 1, path);
    c.groups = uint_or(j, "groups", 1, path);
    c.bias = bool_or(j, "bias", false, path);
    return c;
  }
  if (type == "batchnorm") return BatchNormSpec{uint_field(j, "c", path)};
  if (type == "fc") return FcSpec{uint_field(j, "n_in", path), uint_field(j, "n_out", path), bool_or(j, "bias", true, path)};
  if (type == "gap") return GlobalAvgPoolSpec{};
  if (type == "pool") {
    return PoolSpec{string_or(j, "kind", "max", path), uint_or(j, "k", 2, path), uint_or(j, "stride", 2, path)};
  }
  if (type == "activation") return ActivationSpec{string_or(j, "fn", "relu", path)};
  if (type == "slice") return SliceSpec{uint_field(j, "channels", path)};
  if (type == "residual") {
    ResidualSpec r;
    r.branch = parse_layers(field(j, "branch", path), path + ".branch");
    r.shortcut = j.contains("shortcut") ? parse_layers(j["shortcut"], path + ".shortcut") : std::vector<LayerSpec>{};
    const std::string merge = string_or(j, "merge", "add", path);
    if (merge == "add") {
      r.merge = Merge::Add;
    } else if (merge == "concat") {
      r.merge = Merge::Concat;
    } else {
      throw ParseError(path + ".merge: expected \"add\" or \"concat\"");
    }
    r.split = bool_or(j, "split", false, path);
    return r;
  }
  throw ParseError(path + ".type: unknown layer type \"" + type + "\"");
}

std::vector<LayerSpec> parse_layers(const json& arr, const std::string& path) {
  if (!arr.is_array()) throw ParseError(path + ": expected an array");
  std::vector<LayerSpec> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(parse_layer(arr[i], at(path, i)));
  return out;
}

json layers_to_json(const std::vector<LayerSpec>& layers) {
  json arr = json::array();
  for (const auto& l : layers) {
    arr.push_back(std::visit(
        overloaded{
            [](const ConvSpec& c) {
              return json{{"type", "conv"}, {"c_in", c.c_in}, {"c_out", c.c_out}, {"kh", c.kh}, {"kw", c.kw},
                          {"stride", c.stride}, {"groups", c.groups}, {"bias", c.bias}};
            },
            [](const BatchNormSpec& b) { return json{{"type", "batchnorm"}, {"c", b.c}}; },
            [](const FcSpec& f) { return json{{"type", "fc"}, {"n_in", f.n_in}, {"n_out", f.n_out}, {"bias", f.bias}}; },
            [](const GlobalAvgPoolSpec&) { return json{{"type", "gap"}}; },
            [](const PoolSpec& p) { return json{{"type", "pool"}, {"kind", p.kind}, {"k", p.k}, {"stride", p.stride}}; },
            [](const ActivationSpec& a) { return json{{"type", "activation"}, {"fn", a.fn}}; },
            [](const SliceSpec& s) { return json{{"type", "slice"}, {"channels", s.channels}}; },
            [](const ResidualSpec& r) {
              return json{{"type", "residual"},
                          {"merge", r.merge == Merge::Add ? "add" : "concat"},
                          {"split", r.split},
                          {"branch", layers_to_json(r.branch)},
                          {"shortcut", layers_to_json(r.shortcut)}};
            },
        },
        l.layer));
  }
  return arr;
}

}  // namespace

ArchitectureSpec parse_spec(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source + ":" + std::to_string(line_of(text, e.byte)) + ": malformed JSON: " + e.what());
  }
  if (!j.is_object()) throw ParseError(source + ": top level must be an object");
  const std::string root = source;
  const std::size_t schema = uint_field(j, "schema", root);
  if (schema != 1) throw ParseError(root + ".schema: unsupported version " + std::to_string(schema));
  ArchitectureSpec spec;
  const json& name = field(j, "name", root);
  if (!name.is_string()) throw ParseError(root + ".name: expected a string");
  spec.name = name.get<std::string>();
  spec.num_classes = uint_field(j, "num_classes", root);
  spec.feature_dim = uint_field(j, "feature_dim", root);
  spec.input_channels = uint_or(j, "input_channels", 3, root);
  spec.layers = parse_layers(field(j, "layers", root), "layers");
  validate(spec);
  return spec;
}

ArchitectureSpec load_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open architecture file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_spec(ss.str(), path.filename().string());
}

std::string to_json(const ArchitectureSpec& spec) {
  json j{{"schema", 1},
         {"name", spec.name},
         {"num_classes", spec.num_classes},
         {"feature_dim", spec.feature_dim},
         {"input_channels", spec.input_channels},
         {"layers", layers_to_json(spec.layers)}};
  return j.dump(1) + "\n";
}

}  // namespace fixedhead::arch
