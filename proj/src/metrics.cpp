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

#include "fedalign/metrics.hpp"

#include <ostream>

#include "fedalign/errors.hpp"
#include "fedalign/text_io.hpp"

namespace fedalign {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

MetricsReport compute_metrics(const std::vector<std::vector<std::uint8_t>>& predicted,
                              const std::vector<std::vector<std::uint8_t>>& truth) {
  if (truth.empty()) throw ConfigError("metrics: empty test set");
  if (predicted.size() != truth.size()) throw ConfigError("metrics: prediction count mismatch");
  const std::size_t classes = truth.front().size();
  MetricsReport r;
  r.per_class.resize(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (predicted[i].size() != classes || truth[i].size() != classes) {
        throw ConfigError("metrics: label vector length mismatch");
      }
      const bool p = predicted[i][c] != 0;
      const bool t = truth[i][c] != 0;
      tp += p && t;
      fp += p && !t;
      fn += !p && t;
      tn += !p && !t;
    }
    ClassMetrics& m = r.per_class[c];
    m.precision = ratio(tp, tp + fp);
    m.recall = ratio(tp, tp + fn);
    m.f1 = ratio(2 * tp, 2 * tp + fp + fn);
    m.accuracy = ratio(tp + tn, truth.size());
    r.macro_f1 += m.f1;
    r.macro_accuracy += m.accuracy;
  }
  if (classes > 0) {
    r.macro_f1 /= static_cast<double>(classes);
    r.macro_accuracy /= static_cast<double>(classes);
  }
  return r;
}

MetricsReport evaluate(const GlobalModel& model, const Dataset& test) {
  if (test.size() == 0) throw ConfigError("evaluate: empty test set");
  if (test.class_count() != model.class_count()) throw ConfigError("evaluate: label space size mismatch");
  std::vector<std::vector<std::uint8_t>> predicted;
  predicted.reserve(test.size());
  for (const auto& x : test.features) {
    const Vector logits = class_scores(encode_data(model, x), model.label_table);
    std::vector<std::uint8_t> row(model.class_count(), 0);
    for (std::size_t c : predict(logits, model.task)) row[c] = 1;
    predicted.push_back(std::move(row));
  }
  return compute_metrics(predicted, test.truth);
}

void write_metrics_report(std::ostream& out, const MetricsReport& report, const LabelSpace& labels) {
  out << "macro_f1 " << format_fixed(report.macro_f1, 6) << '\n';
  out << "macro_acc " << format_fixed(report.macro_accuracy, 6) << '\n';
  out << "class precision recall f1 accuracy\n";
  for (std::size_t c = 0; c < report.per_class.size(); ++c) {
    const auto& m = report.per_class[c];
    out << (c < labels.size() ? labels.ids[c] : std::to_string(c)) << ' ' << format_fixed(m.precision, 6) << ' '
        << format_fixed(m.recall, 6) << ' ' << format_fixed(m.f1, 6) << ' ' << format_fixed(m.accuracy, 6) << '\n';
  }
}

}  // namespace fedalign
