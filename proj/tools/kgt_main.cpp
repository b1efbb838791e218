// kgt: knowledge-graph traversal retrieval CLI.
// Subcommands: ingest (graph file conversion), verify (static plan check),
// run (single query), eval (batch evaluation).
// Exit codes: 0 success or classified outcome, 1 failed verification
// (verify command), 2 usage/config/file errors.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "kgt/config.hpp"
#include "kgt/eval.hpp"
#include "kgt/executor.hpp"
#include "kgt/graph.hpp"
#include "kgt/planner.hpp"
#include "kgt/verifier.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitVerifyFail = 1;
constexpr int kExitUsage = 2;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw kgt::ParseError("cannot open file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct Overrides {
    std::optional<double> theta;
    std::optional<std::size_t> top_k;
    std::optional<int> max_hops;
    std::optional<std::size_t> step_cap;
    std::optional<int> max_retries;
    std::optional<std::size_t> context_window;
    std::optional<int> parallelism;
    std::optional<std::string> planner_kind;
    std::optional<std::string> planner_script;
    std::optional<std::string> answerer_kind;
    std::optional<std::string> answerer_script;
    std::optional<std::string> model;
    std::optional<double> temperature;
    std::optional<std::string> endpoint;
    std::optional<std::string> results_path;
    std::optional<std::string> summary_path;
    std::optional<std::string> few_shot_path;
};

void add_override_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--theta", o.theta, "similarity threshold in [-1, 1]");
    cmd->add_option("--top-k", o.top_k, "node finding result cap");
    cmd->add_option("--max-hops", o.max_hops, "multi-hop traversal bound");
    cmd->add_option("--step-cap", o.step_cap, "per-step result size cap");
    cmd->add_option("--max-retries", o.max_retries, "plan regeneration attempts");
    cmd->add_option("--context-window", o.context_window, "answer context window (tokens)");
    cmd->add_option("--parallelism", o.parallelism, "concurrent queries in eval");
    cmd->add_option("--planner", o.planner_kind, "planner: template | external | mock");
    cmd->add_option("--planner-script", o.planner_script, "mock planner script path");
    cmd->add_option("--answerer", o.answerer_kind, "answerer: echo | external | mock");
    cmd->add_option("--answerer-script", o.answerer_script, "mock answerer script path");
    cmd->add_option("--model", o.model, "chat model name");
    cmd->add_option("--temperature", o.temperature, "chat sampling temperature");
    cmd->add_option("--endpoint", o.endpoint, "chat completion endpoint");
    cmd->add_option("--results", o.results_path, "results JSONL path");
    cmd->add_option("--summary", o.summary_path, "summary JSON path");
    cmd->add_option("--few-shot", o.few_shot_path, "few-shot examples file");
}

kgt::RunConfig effective_config(const std::string& config_path, const Overrides& o) {
    kgt::RunConfig config;
    if (!config_path.empty()) config = kgt::load_config_file(config_path);
    if (o.theta) config.settings.theta = *o.theta;
    if (o.top_k) config.settings.top_k = *o.top_k;
    if (o.max_hops) config.settings.max_hops = *o.max_hops;
    if (o.step_cap) config.settings.step_result_cap = *o.step_cap;
    if (o.max_retries) config.settings.max_retries = *o.max_retries;
    if (o.context_window) config.settings.context_window = *o.context_window;
    if (o.parallelism) config.parallelism = *o.parallelism;
    if (o.planner_kind) config.planner.kind = *o.planner_kind;
    if (o.planner_script) config.planner.script_path = *o.planner_script;
    if (o.answerer_kind) config.answerer.kind = *o.answerer_kind;
    if (o.answerer_script) config.answerer.script_path = *o.answerer_script;
    if (o.model) config.model = *o.model;
    if (o.temperature) config.temperature = *o.temperature;
    if (o.endpoint) config.endpoint = *o.endpoint;
    if (o.results_path) config.results_path = *o.results_path;
    if (o.summary_path) config.summary_path = *o.summary_path;
    if (o.few_shot_path) config.few_shot_path = *o.few_shot_path;
    kgt::validate_config(config);
    return config;
}

int cmd_ingest(const std::string& input, const std::string& format, const std::string& output) {
    json doc;
    try {
        doc = json::parse(read_file(input));
    } catch (const json::parse_error& e) {
        std::cerr << "error: " << input << ": " << e.what() << "\n";
        return kExitUsage;
    }
    if (format == "grbench") doc = kgt::adapt_grbench(doc);

    kgt::KnowledgeGraph graph = kgt::KnowledgeGraph::load(doc);
    std::string canonical = graph.to_json().dump(2);
    if (!output.empty()) {
        std::ofstream out(output);
        if (!out) {
            std::cerr << "error: cannot write '" << output << "'\n";
            return kExitUsage;
        }
        out << canonical << "\n";
    } else {
        std::cout << canonical << "\n";
    }
    std::cout << graph.schema().node_types.size() << " node types, "
              << graph.schema().edge_types.size() << " edge types\n";
    return kExitOk;
}

int cmd_verify(const std::string& graph_path, const std::string& plan_path) {
    kgt::KnowledgeGraph graph = kgt::KnowledgeGraph::load_file(graph_path);
    kgt::TraversalPlan plan = kgt::parse_plan(read_file(plan_path));
    kgt::VerificationReport report = kgt::verify_plan(plan, graph.schema());
    std::cout << report.to_json().dump(2) << "\n";
    return report.pass ? kExitOk : kExitVerifyFail;
}

int cmd_run(const std::string& graph_path, const std::string& query, const std::string& config_path,
            const Overrides& overrides, bool dry_run) {
    kgt::RunConfig config = effective_config(config_path, overrides);
    kgt::KnowledgeGraph graph = kgt::KnowledgeGraph::load_file(graph_path);

    auto planner = kgt::make_plan_provider(config, graph.schema());
    auto embedder = kgt::make_embedder(config);
    std::vector<std::pair<std::string, std::string>> few_shot;
    if (!config.few_shot_path.empty()) few_shot = kgt::load_few_shot_file(config.few_shot_path);

    if (dry_run) {
        kgt::PlannerConfig planner_config;
        planner_config.max_retries = config.settings.max_retries;
        planner_config.max_hops = config.settings.max_hops;
        planner_config.few_shot_examples = few_shot;
        try {
            kgt::PlannerOutcome outcome =
                kgt::plan_with_verification(*planner, query, graph.schema(), planner_config);
            std::cout << kgt::serialize_plan(outcome.plan) << "\n"
                      << outcome.report.to_json().dump(2) << "\n";
        } catch (const kgt::PlanningExhausted& e) {
            std::cout << "planning-exhausted after " << e.attempts << " attempts\n";
            if (e.final_report.has_value()) std::cout << e.final_report->to_json().dump(2) << "\n";
            std::cerr << e.what() << "\n";
        }
        return kExitOk;
    }

    auto answerer = kgt::make_answer_provider(config);
    kgt::RunRecord record =
        kgt::run_query(graph, *planner, *answerer, *embedder, query, config.settings, few_shot);

    if (!config.results_path.empty()) {
        std::ofstream out(config.results_path, std::ios::app);
        if (!out) {
            std::cerr << "error: cannot write '" << config.results_path << "'\n";
            return kExitUsage;
        }
        out << record.to_json().dump() << "\n";
    }
    if (record.error_class == "none" ||
        record.error_class == "hallucination-blocked-at-verification") {
        std::cout << record.answer << "\n";
    } else {
        std::cout << "[" << record.error_class << "] " << record.error_detail << "\n";
    }
    return kExitOk;
}

int cmd_eval(const std::string& graph_path, const std::string& questions_path,
             const std::string& config_path, const Overrides& overrides) {
    kgt::RunConfig config = effective_config(config_path, overrides);
    kgt::KnowledgeGraph graph = kgt::KnowledgeGraph::load_file(graph_path);
    std::vector<kgt::Question> questions = kgt::load_questions_file(questions_path);

    auto planner = kgt::make_plan_provider(config, graph.schema());
    auto answerer = kgt::make_answer_provider(config);
    auto embedder = kgt::make_embedder(config);

    kgt::BatchConfig batch;
    batch.settings = config.settings;
    batch.pricing = config.pricing;
    batch.parallelism = config.parallelism;
    batch.reasoning_floor = config.reasoning_floor;
    batch.results_path = config.results_path;
    batch.summary_path = config.summary_path;
    batch.judge = kgt::make_judge(config);
    if (!config.few_shot_path.empty()) batch.few_shot = kgt::load_few_shot_file(config.few_shot_path);

    kgt::EvalSummary summary =
        kgt::run_batch(graph, *planner, *answerer, *embedder, questions, batch);
    std::cout << summary.to_json(config.reasoning_floor).dump(2) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"knowledge-graph traversal retrieval: plan, verify, execute, evaluate"};
    app.require_subcommand(1);

    // ingest
    std::string ingest_input, ingest_format = "native", ingest_output;
    auto* ingest = app.add_subcommand("ingest", "convert a graph file to the canonical format");
    ingest->add_option("input", ingest_input, "input graph file")->required();
    ingest->add_option("--format", ingest_format, "input format: native | grbench")
        ->check(CLI::IsMember({"native", "grbench"}));
    ingest->add_option("-o,--output", ingest_output, "output path (stdout when omitted)");

    // verify
    std::string verify_graph, verify_plan_path;
    auto* verify = app.add_subcommand("verify", "statically verify a plan against a graph schema");
    verify->add_option("--graph", verify_graph, "graph file")->required();
    verify->add_option("--plan", verify_plan_path, "plan document file")->required();

    // run
    std::string run_graph, run_query_text, run_config;
    bool run_dry = false;
    Overrides run_overrides;
    auto* run = app.add_subcommand("run", "answer a single query");
    run->add_option("--graph", run_graph, "graph file")->required();
    run->add_option("--query", run_query_text, "query text")->required();
    run->add_option("--config", run_config, "run configuration file");
    run->add_flag("--dry-run", run_dry, "stop after plan verification; print plan and report");
    add_override_flags(run, run_overrides);

    // eval
    std::string eval_graph, eval_questions, eval_config;
    Overrides eval_overrides;
    auto* eval = app.add_subcommand("eval", "run a batch of questions and summarize metrics");
    eval->add_option("--graph", eval_graph, "graph file")->required();
    eval->add_option("--questions", eval_questions, "questions JSONL file")->required();
    eval->add_option("--config", eval_config, "run configuration file");
    add_override_flags(eval, eval_overrides);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (app.got_subcommand(ingest)) return cmd_ingest(ingest_input, ingest_format, ingest_output);
        if (app.got_subcommand(verify)) return cmd_verify(verify_graph, verify_plan_path);
        if (app.got_subcommand(run)) {
            return cmd_run(run_graph, run_query_text, run_config, run_overrides, run_dry);
        }
        if (app.got_subcommand(eval)) {
            return cmd_eval(eval_graph, eval_questions, eval_config, eval_overrides);
        }
    } catch (const kgt::PlanFormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const kgt::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const kgt::SchemaViolation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const kgt::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
