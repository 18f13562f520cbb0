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

#include "fixedhead/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace fixedhead {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

namespace {

double evaluate(const ScalarFn& f, const Tensor& x) {
  Tape tape;
  return f(tape.constant(x)).value()[0];
}

void note(GradCheckResult& r, double a, double n, std::size_t index, const std::string& name) {
  r.analytic.push_back(a);
  r.numeric.push_back(n);
  const double e = relative_error(a, n);
  if (e > r.max_rel_error) {
    r.max_rel_error = e;
    r.worst_index = index;
    r.worst_name = name;
  }
}

}  // namespace

GradCheckResult finite_diff_report(const ScalarFn& f, const Tensor& x, double step) {
  GradCheckResult r;
  std::vector<double> analytic;
  {
    Tape tape;
    Var xv = tape.variable(x);
    Var y = f(xv);
    tape.backward(y);
    auto g = xv.grad();
    analytic.assign(g.begin(), g.end());
  }
  Tensor probe = x;
  probe.clear_grad();
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + step;
    const double up = evaluate(f, probe);
    probe[i] = orig - step;
    const double down = evaluate(f, probe);
    probe[i] = orig;
    note(r, analytic[i], (up - down) / (2.0 * step), i, "");
  }
  return r;
}

GradCheckResult finite_diff_report(const LossFn& loss, std::span<Parameter* const> params,
                                   double step) {
  for (Parameter* p : params) p->value.clear_grad();
  {
    Tape tape;
    tape.backward(loss(tape));
  }
  std::vector<std::vector<double>> analytic;
  for (Parameter* p : params) {
    if (p->trainable && p->value.has_grad()) {
      analytic.emplace_back(p->value.grad().begin(), p->value.grad().end());
    } else {
      analytic.emplace_back(p->value.size(), 0.0);
    }
    p->value.clear_grad();
  }

  auto eval = [&] {
    Tape tape;
    return loss(tape).value()[0];
  };
  GradCheckResult r;
  std::size_t flat = 0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    if (!p.trainable) continue;
    for (std::size_t i = 0; i < p.value.size(); ++i, ++flat) {
      const double orig = p.value[i];
      p.value[i] = orig + step;
      const double up = eval();
      p.value[i] = orig - step;
      const double down = eval();
      p.value[i] = orig;
      note(r, analytic[k][i], (up - down) / (2.0 * step), flat, p.name);
    }
  }
  return r;
}

}  // namespace fixedhead
