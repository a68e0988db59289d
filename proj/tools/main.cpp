#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cliniflow/cli/commands.hpp"
#include "cliniflow/errors.hpp"

namespace cli = cliniflow::cli;

int main(int argc, char** argv) {
  CLI::App app{"cliniflow: span-preserving annotation pipelines for clinical text"};
  app.require_subcommand(1);

  cli::RunConfig run;
  std::string run_format = "brat", prov_level = "steps", prov_out;
  std::size_t workers = 1;
  auto* run_cmd = app.add_subcommand("run", "Run a pipeline over a directory of .txt files");
  run_cmd->add_option("--pipeline-path", run.pipeline_path, "Pipeline configuration (JSON)")->required();
  run_cmd->add_option("--input-dir", run.input_dir, "Directory of UTF-8 .txt documents")->required();
  run_cmd->add_option("--output-dir", run.output_dir, "Directory for the annotations")->required();
  run_cmd->add_option("--output-format", run_format, "brat, doccano or json")->capture_default_str();
  run_cmd->add_option("--prov-level", prov_level, "none, steps or full")->capture_default_str();
  run_cmd->add_option("--prov-out", prov_out, "Provenance file (.dot for Graphviz, PROV-JSON otherwise)");
  run_cmd->add_option("--workers", workers, "Documents processed in parallel")->capture_default_str();

  std::string in_format, out_format, in_path, out_path;
  auto* convert_cmd = app.add_subcommand("convert", "Convert an annotated corpus between formats");
  convert_cmd->add_option("--in-format", in_format, "brat, doccano or json")->required();
  convert_cmd->add_option("--out-format", out_format, "brat, doccano or json")->required();
  convert_cmd->add_option("--in-path", in_path, "Input directory")->required();
  convert_cmd->add_option("--out-path", out_path, "Output directory")->required();

  cli::EvalConfig eval;
  std::string mode = "exact", json_out;
  bool label_insensitive = false;
  auto* eval_cmd = app.add_subcommand("eval", "Score Brat predictions against a Brat reference");
  eval_cmd->add_option("--pred-dir", eval.pred_dirs, "Prediction directory (repeat to compare)")
      ->required();
  eval_cmd->add_option("--ref-dir", eval.ref_dir, "Reference directory (.txt and .ann)")->required();
  eval_cmd->add_option("--mode", mode, "exact or overlap")->capture_default_str();
  eval_cmd->add_option("--threshold", eval.match.iou_threshold, "IoU threshold for overlap mode")
      ->capture_default_str();
  eval_cmd->add_flag("--label-insensitive", label_insensitive, "Ignore labels when matching");
  eval_cmd->add_option("--json-out", json_out, "Write the scores as JSON");

  std::string prov_in, prov_format, prov_dest;
  auto* prov_cmd = app.add_subcommand("prov", "Provenance utilities");
  prov_cmd->require_subcommand(1);
  auto* export_cmd = prov_cmd->add_subcommand("export", "Re-export a PROV-JSON graph");
  export_cmd->add_option("--in", prov_in, "PROV-JSON file")->required();
  export_cmd->add_option("--format", prov_format, "dot or prov-json")->required();
  export_cmd->add_option("--out", prov_dest, "Output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitConfig;
  }

  try {
    if (*run_cmd) {
      run.output_format = cli::parse_format(run_format);
      run.prov_level = cliniflow::provenance::parse_verbosity(prov_level);
      if (!prov_out.empty()) run.prov_out = prov_out;
      run.workers = workers;
      return cli::cmd_run(run, std::cout, std::cerr);
    }
    if (*convert_cmd) return cli::cmd_convert(in_format, out_format, in_path, out_path, std::cout, std::cerr);
    if (*eval_cmd) {
      eval.match.mode = cliniflow::eval::parse_match_mode(mode);
      eval.match.label_sensitive = !label_insensitive;
      if (!json_out.empty()) eval.json_out = json_out;
      return cli::cmd_eval(eval, std::cout, std::cerr);
    }
    if (*export_cmd) return cli::cmd_prov_export(prov_in, prov_format, prov_dest, std::cout, std::cerr);
  } catch (const cliniflow::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kExitConfig;
  }
  return cli::kExitConfig;
}
