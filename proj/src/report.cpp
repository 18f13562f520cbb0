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


#include "fixedhead/report.hpp"

#include <algorithm>
#include <cstdio>

namespace fixedhead {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::vector<HeadComparison> compare_heads(const TrainConfig& base, const std::vector<HeadKind>& heads,
                                          const Datasets& data) {
  std::vector<HeadKind> order = heads;
  if (std::find(order.begin(), order.end(), HeadKind::Learned) == order.end()) {
    order.insert(order.begin(), HeadKind::Learned);
  }
  std::vector<HeadComparison> rows;
  for (HeadKind kind : order) {
    TrainConfig cfg = base;
    cfg.head = kind;
    TrainResult r = train(cfg, data);
    rows.push_back({kind, evaluate(r.model, data.test, cfg.normalization), 0.0});
  }
  const auto learned = std::find_if(rows.begin(), rows.end(), [](const auto& r) { return r.head == HeadKind::Learned; });
  const double baseline = learned->top1;
  for (HeadComparison& r : rows) r.gap = r.top1 - baseline;
  return rows;
}

std::string format_comparison_csv(const std::vector<HeadComparison>& rows) {
  std::string out = "head,top1,gap\n";
  for (const HeadComparison& r : rows) {
    out += std::string(head_kind_name(r.head)) + "," + fixed(r.top1, 6) + "," + fixed(r.gap, 6) + "\n";
  }
  return out;
}

AuditSummary audit_spec(const arch::ArchitectureSpec& spec, std::optional<std::size_t> num_classes, bool headless) {
  const arch::ArchitectureSpec sized = num_classes ? arch::with_num_classes(spec, *num_classes) : spec;
  AuditSummary s;
  s.name = sized.name;
  s.num_classes = sized.num_classes;
  s.baseline = arch::count_total(sized);
  if (headless) {
    arch::AuditReport h = arch::count_total(arch::headless_transform(sized, sized.num_classes));
    h.savings_vs_baseline = arch::savings(s.baseline, h);
    s.headless = h;
  }
  return s;
}

std::string format_audit_text(const AuditSummary& s) {
  std::string out;
  out += "spec: " + s.name + "\n";
  out += "classes: " + std::to_string(s.num_classes) + "\n";
  out += "total_params: " + std::to_string(s.baseline.total_params) + "\n";
  out += "classifier_params: " + std::to_string(s.baseline.classifier_params) + "\n";
  out += "classifier_fraction: " + fixed(100.0 * s.baseline.classifier_fraction, 2) + "%\n";
  if (s.headless) {
    out += "headless_params: " + std::to_string(s.headless->total_params) + "\n";
    out += "savings: " + fixed(100.0 * *s.headless->savings_vs_baseline, 2) + "%\n";
  }
  return out;
}

std::string format_audit_csv_row(const AuditSummary& s) {
  std::string out = s.name + "," + std::to_string(s.num_classes) + "," + std::to_string(s.baseline.total_params) + "," +
                    std::to_string(s.baseline.classifier_params) + "," + fixed(s.baseline.classifier_fraction, 6) + ",";
  if (s.headless) {
    out += std::to_string(s.headless->total_params) + "," + fixed(*s.headless->savings_vs_baseline, 6);
  } else {
    out += ",";
  }
  return out;
}

}  // namespace fixedhead
