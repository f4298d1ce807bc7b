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

#ifndef FEDALIGN_TEXT_IO_HPP_
#define FEDALIGN_TEXT_IO_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace fedalign {

/// Shortest decimal string that parses back to exactly `v`.
std::string format_real(double v);

/// Fixed-point with `decimals` digits, locale-independent.
std::string format_fixed(double v, int decimals);

/// Whole-token parse; throws ParseError(line) on trailing garbage or overflow.
double parse_real(std::string_view token, std::size_t line = 0);
long long parse_int(std::string_view token, std::size_t line = 0);
std::size_t parse_count(std::string_view token, std::size_t line = 0);

/// Split on runs of spaces/tabs.
std::vector<std::string_view> split_ws(std::string_view line);

/// Split on one delimiter character, keeping empty fields.
std::vector<std::string_view> split_on(std::string_view line, char delim);

std::string_view trim(std::string_view s);

}  // namespace fedalign

#endif  // FEDALIGN_TEXT_IO_HPP_
