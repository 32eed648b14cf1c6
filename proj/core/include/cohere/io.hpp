// Copyright 2026 The cohere Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include "cohere/certificate.hpp"
#include "cohere/experiments.hpp"
#include "cohere/frames.hpp"
#include "cohere/precondition.hpp"

namespace cohere::io {

using Json = nlohmann::ordered_json;

// Text matrix format: a "rows cols" header line followed by one line per row
// of space separated values printed with 17 significant digits.
DenseMatrix parse_matrix(std::istream& in);
void format_matrix(std::ostream& out, const DenseMatrix& a);
DenseMatrix read_matrix(const std::string& path);
void write_matrix(const std::string& path, const DenseMatrix& a);

void write_text(const std::string& path, const std::string& text);

std::string version_string();

Json to_json(const FrameReport& r);
Json to_json(const ActiveSets& s);
Json to_json(const PreconditionResult& r);
Json to_json(const CertificateResult& r);
Json to_json(const RecoveryResult& r);
Json to_json(const std::vector<TableRow>& rows);
Json to_json(const PhaseDiagram& d);
Json to_json(const SweepRecord& r);
Json solver_json(conic::Status status, int iterations, double gap);

// {config, seed, frame_stats, result, solver, versions}. Throws kInvalidArgument
// when a non-finite number would be serialized.
Json make_report(Json config, std::uint64_t seed, Json frame_stats, Json result, Json solver);
void write_report(const std::string& path, const Json& report);

}  // namespace cohere::io
