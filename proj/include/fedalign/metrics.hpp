/**
 * Copyright 2026 The FedAlign Simulator Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef FEDALIGN_METRICS_HPP_
#define FEDALIGN_METRICS_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "fedalign/data.hpp"
#include "fedalign/model.hpp"

namespace fedalign {

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
};

struct MetricsReport {
  std::vector<ClassMetrics> per_class;
  double macro_f1 = 0.0;
  double macro_accuracy = 0.0;
};

// One-vs-rest binary metrics per class from 0/1 prediction and truth rows;
// any ratio with a zero denominator is 0. Throws ConfigError on empty input.
MetricsReport compute_metrics(const std::vector<std::vector<std::uint8_t>>& predicted,
                              const std::vector<std::vector<std::uint8_t>>& truth);

/// Predicts every test sample with `model` and scores it.
MetricsReport evaluate(const GlobalModel& model, const Dataset& test);

void write_metrics_report(std::ostream& out, const MetricsReport& report, const LabelSpace& labels);

}  // namespace fedalign

#endif  // FEDALIGN_METRICS_HPP_
