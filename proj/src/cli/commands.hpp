#pragma once

#include <string>

#include "cli/run_config.hpp"

namespace litege::cli {

// Each command reads its section of the config, writes its outputs
// atomically, and drops the fully-resolved config next to the primary
// output (<dir>/run.json for directory outputs, <file>.run.json otherwise).

void cmd_gen_family(const RunConfig& config);
void cmd_gen_geodesics(const RunConfig& config);
void cmd_canonicalize(const RunConfig& config);
void cmd_select_voxels(const RunConfig& config);
void cmd_fit_pca(const RunConfig& config);
void cmd_describe(const RunConfig& config);
void cmd_train_geodesic(const RunConfig& config);
void cmd_train_matcher(const RunConfig& config);
void cmd_train_tnet(const RunConfig& config);
void cmd_infer(const RunConfig& config);
void cmd_match(const RunConfig& config);
void cmd_trace(const RunConfig& config);
void cmd_eval(const RunConfig& config);
void cmd_bench(const RunConfig& config);

void emit_run_config(const RunConfig& config, const std::string& primary_output,
                     bool output_is_dir);

}  // namespace litege::cli
