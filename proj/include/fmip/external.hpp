// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "fmip/backend.hpp"
#include "fmip/lp_format.hpp"

namespace fmip {

namespace detail {

inline std::string substitute(std::string tmpl, const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  while ((pos = tmpl.find(key, pos)) != std::string::npos) {
    tmpl.replace(pos, key.size(), value);
    pos += value.size();
  }
  return tmpl;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace detail

// Runs an external solver through a command template with {input}, {output}
// and {time_limit} placeholders. The instance goes out as LP text; the
// solution comes back as `name value` lines.
inline SolveResult external_solve(const MilpInstance& inst, const std::string& cmd_template,
                                  double time_limit_s) {
  namespace fs = std::filesystem;
  SolveResult res;
  const auto t0 = std::chrono::steady_clock::now();
  const auto stamp =
      std::chrono::duration_cast<std::chrono::nanoseconds>(t0.time_since_epoch()).count();
  const fs::path dir = fs::temp_directory_path();
  const fs::path in_path = dir / ("fmip_" + std::to_string(stamp) + ".lp");
  const fs::path out_path = dir / ("fmip_" + std::to_string(stamp) + ".sol");
  {
    std::ofstream out(in_path);
    out << write_lp(inst);
  }

  std::string cmd = cmd_template;
  cmd = detail::substitute(cmd, "{input}", in_path.string());
  cmd = detail::substitute(cmd, "{output}", out_path.string());
  cmd = detail::substitute(cmd, "{time_limit}", std::to_string(time_limit_s));

  const int rc = std::system(cmd.c_str());
  res.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const auto cleanup = [&] {
    std::error_code ec;
    fs::remove(in_path, ec);
    fs::remove(out_path, ec);
  };

  if (!fs::exists(out_path)) {
    cleanup();
    res.status = res.wall_time_s >= time_limit_s ? SolveStatus::kTimeout : SolveStatus::kError;
    res.message = "no solution file (exit code " + std::to_string(rc) + ")";
    return res;
  }
  const std::string sol_text = detail::slurp(out_path);
  cleanup();
  try {
    Assignment x = read_solution_file(sol_text, inst);
    res.assignment = x;
    res.objective = inst.obj.dot(x);
    res.status = SolveStatus::kFeasible;
  } catch (const ParseError& e) {
    res.status = SolveStatus::kError;
    res.message = e.what();
  }
  return res;
}

class ExternalBackend : public Backend {
 public:
  explicit ExternalBackend(std::string cmd_template) : cmd_template_(std::move(cmd_template)) {}
  SolveResult solve(const MilpInstance& inst, double time_limit_s) const override {
    return external_solve(inst, cmd_template_, time_limit_s);
  }

 private:
  std::string cmd_template_;
};

}  // namespace fmip
