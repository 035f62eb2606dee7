#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "flowtel.h"

namespace {

using nlohmann::json;

struct CString {
   char* ptr = nullptr;
   ~CString() { flowtel_free(ptr); }
};

int fail(int rc, const std::string& what) {
   std::cerr << "error: " << what << ": " << flowtel_error_name(rc) << "\n";
   return 1;
}

void write_out(const std::string& text, const std::string& path) {
   if (path.empty()) {
      std::cout << text;
      if (!text.empty() && text.back() != '\n') std::cout << "\n";
      return;
   }
   std::ofstream os(path, std::ios::binary);
   os << text;
}

struct ExperimentArgs {
   std::string config_path;
   std::string output;
   std::string format;  // "csv", "json" or "jsonl"
   uint64_t seed = 0;
   uint64_t trials = 0;
   uint64_t flows = 0;
   uint64_t epochs = 0;
   bool seed_set = false, trials_set = false, flows_set = false, epochs_set = false;
};

void add_common(CLI::App* cmd, ExperimentArgs& a, const char* default_format) {
   cmd->add_option("--config", a.config_path, "JSON file with experiment settings");
   cmd->add_option("-o,--output", a.output, "write results to this file instead of stdout");
   a.format = default_format;
   cmd->add_option("--format", a.format, "output format: csv, json or jsonl")
       ->check(CLI::IsMember({"csv", "json", "jsonl"}));
   cmd->add_option("--seed", a.seed, "master seed")->each([&](const std::string&) { a.seed_set = true; });
   cmd->add_option("--trials", a.trials, "trials per point")->each([&](const std::string&) { a.trials_set = true; });
   cmd->add_option("--flows", a.flows, "flow count")->each([&](const std::string&) { a.flows_set = true; });
   cmd->add_option("--epochs", a.epochs, "epoch count")->each([&](const std::string&) { a.epochs_set = true; });
}

json assemble_config(const ExperimentArgs& a) {
   json cfg = json::object();
   if (!a.config_path.empty()) {
      std::ifstream is(a.config_path);
      if (!is) throw CLI::ValidationError("--config", "cannot open " + a.config_path);
      is >> cfg;
   }
   if (a.seed_set) cfg["seed"] = a.seed;
   if (a.trials_set) cfg["trials"] = a.trials;
   if (a.flows_set) cfg["flows"] = a.flows;
   if (a.epochs_set) cfg["epochs"] = a.epochs;
   return cfg;
}

int run_experiment(const std::string& verb, const ExperimentArgs& a) {
   json cfg = assemble_config(a);
   CString result;
   int rc = flowtel_experiment_run(verb.c_str(), cfg.dump().c_str(), &result.ptr);
   if (rc != FLOWTEL_OK) return fail(rc, verb);

   if (a.format == "json") {
      write_out(result.ptr, a.output);
      return 0;
   }
   if (a.format == "csv") {
      CString csv;
      rc = flowtel_result_csv(result.ptr, &csv.ptr);
      if (rc != FLOWTEL_OK) return fail(rc, "csv conversion");
      write_out(csv.ptr, a.output);
      return 0;
   }
   json doc = json::parse(result.ptr);
   std::string lines;
   json meta = json::object();
   for (const auto& [key, value] : doc.items())
      if (key != "timeline" && key != "rows") meta[key] = value;
   lines += meta.dump() + "\n";
   const char* body = doc.contains("timeline") ? "timeline" : "rows";
   if (doc.contains(body))
      for (const auto& entry : doc.at(body)) lines += entry.dump() + "\n";
   write_out(lines, a.output);
   return 0;
}

}  // namespace

int main(int argc, char** argv) {
   CLI::App app{"network loss telemetry experiments"};
   app.require_subcommand(1);

   ExperimentArgs threshold, loss, shift, accuracy;
   auto* cmd_threshold =
       app.add_subcommand("threshold-sweep", "decode success rate against buckets per flow");
   add_common(cmd_threshold, threshold, "csv");
   auto* cmd_loss = app.add_subcommand("loss-sweep", "smallest decodable sketch across victim, rate and flow axes");
   add_common(cmd_loss, loss, "csv");
   auto* cmd_shift = app.add_subcommand("shift-scenario", "closed-loop reconfiguration timeline under scripted loss");
   add_common(cmd_shift, shift, "jsonl");
   auto* cmd_accuracy = app.add_subcommand("accuracy", "heavy hitter, cardinality and entropy accuracy checks");
   add_common(cmd_accuracy, accuracy, "json");

   std::string decode_path, decode_output;
   auto* cmd_decode = app.add_subcommand("decode", "decode a saved sketch file into flows");
   cmd_decode->add_option("file", decode_path, "sketch file, binary or JSON")->required();
   cmd_decode->add_option("-o,--output", decode_output, "write the report to this file instead of stdout");

   CLI11_PARSE(app, argc, argv);

   if (cmd_decode->parsed()) {
      CString result;
      int rc = flowtel_decode_file(decode_path.c_str(), &result.ptr);
      if (rc != FLOWTEL_OK && rc != FLOWTEL_ERR_DECODE_INCOMPLETE) return fail(rc, "decode");
      write_out(result.ptr, decode_output);
      return 0;
   }
   if (cmd_threshold->parsed()) return run_experiment("threshold-sweep", threshold);
   if (cmd_loss->parsed()) return run_experiment("loss-sweep", loss);
   if (cmd_shift->parsed()) return run_experiment("shift-scenario", shift);
   if (cmd_accuracy->parsed()) return run_experiment("accuracy", accuracy);
   return 1;
}
