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
#include <optional>
#include <string>
#include <vector>

#include "fixedhead/arch.hpp"
#include "fixedhead/heads.hpp"
#include "fixedhead/train.hpp"

namespace fixedhead {

struct HeadComparison {
  HeadKind head = HeadKind::Learned;
  double top1 = 0.0;
  /// top1 - top1 of the Learned head; positive means the head did better.
  double gap = 0.0;
};

/// Trains one model per head with the same seed, data and batch order and
/// reports final test accuracy. A Learned baseline is trained first when the
/// list does not contain one.
std::vector<HeadComparison> compare_heads(const TrainConfig& base, const std::vector<HeadKind>& heads,
                                          const Datasets& data);

/// "head,top1,gap" followed by one row per head.
std::string format_comparison_csv(const std::vector<HeadComparison>& rows);

struct AuditSummary {
  std::string name;
  std::size_t num_classes = 0;
  arch::AuditReport baseline;
  std::optional<arch::AuditReport> headless;
};

/// Resizes the spec's classifier to K (when given) and counts it, plus the
/// headless variant when requested.
AuditSummary audit_spec(const arch::ArchitectureSpec& spec, std::optional<std::size_t> num_classes, bool headless);

/// Human-readable key: value lines.
std::string format_audit_text(const AuditSummary& s);

inline constexpr const char* kAuditCsvHeader =
    "spec,classes,total_params,classifier_params,classifier_fraction,headless_params,savings";

/// One CSV row (no header); headless columns are empty when not computed.
std::string format_audit_csv_row(const AuditSummary& s);

}  // namespace fixedhead
