// pscaug/manifest.hpp

// Copyright 2026  The pscaug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pscaug/error.hpp"

namespace pscaug {

struct ManifestLine {
  std::size_t line_no = 0;
  std::vector<std::string> fields;
};

/// Whitespace-separated text table. Blank lines and '#' comments are skipped;
/// every remaining line must have exactly `columns` fields.
inline std::vector<ManifestLine> read_manifest(const std::filesystem::path& path,
                                               std::size_t columns) {
  std::ifstream in(path);
  if (!in) fail(Errc::kIoError, "cannot open manifest " + path.string());
  std::vector<ManifestLine> lines;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    std::istringstream ss(text);
    ManifestLine line{line_no, {}};
    for (std::string f; ss >> f;) line.fields.push_back(f);
    if (line.fields.empty() || line.fields.front().starts_with('#')) continue;
    if (line.fields.size() != columns)
      fail(Errc::kConfigError, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                   std::to_string(columns) + " fields");
    lines.push_back(std::move(line));
  }
  return lines;
}

/// Relative paths in a manifest are relative to the manifest's directory.
inline std::filesystem::path resolve_path(const std::filesystem::path& manifest,
                                          const std::string& entry) {
  std::filesystem::path p(entry);
  if (p.is_absolute()) return p;
  return manifest.parent_path() / p;
}

}  // namespace pscaug
