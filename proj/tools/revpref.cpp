// revpref: generate task sheets, run trials against an agent, score them,
// simulate random choice and write the report tables.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <string_view>

#include "CLI11.hpp"
#include "revpref/errors.hpp"
#include "revpref/format.hpp"
#include "revpref/pipeline.hpp"

using namespace revpref;

namespace {

std::vector<Domain> parse_domains(const std::string& text) {
  if (text == "all") return {kAllDomains.begin(), kAllDomains.end()};
  std::vector<Domain> out;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) out.push_back(domain_from_string(item));
  return out;
}

// Credentials are only read from the environment. Reject anything that looks
// like an attempt to pass one on the command line, before CLI11 echoes it
// back in an "unknown option" message.
bool credential_flag(std::string_view arg) {
  for (std::string_view flag : {"--api-key", "--api_key", "--apikey", "--key", "--token"}) {
    if (arg == flag || (arg.size() > flag.size() && arg.substr(0, flag.size()) == flag &&
                        arg[flag.size()] == '=')) {
      return true;
    }
  }
  return false;
}

void print_run(const RunSummary& s) {
  const double rate =
      s.rounds == 0 ? 0.0 : static_cast<double>(s.invalid()) / static_cast<double>(s.rounds);
  std::cout << "trials " << s.trials << " (ran " << s.executed << ", skipped " << s.skipped << ")\n"
            << "complete " << s.complete << ", aborted " << s.aborted << "\n"
            << "rounds " << s.rounds << ", refusals " << s.refusals << ", malformed " << s.malformed
            << ", invalid rate " << format_fixed(100.0 * rate, 2) << "%\n";
}

void print_rows(const std::vector<SummaryRow>& rows) {
  for (const auto& r : rows) {
    std::cout << r.domain << " " << r.variant << " " << r.index << ": ";
    if (r.n == 0) {
      std::cout << "no defined values\n";
      continue;
    }
    std::cout << "mean " << format_fixed(r.mean, 4) << " +/- " << format_fixed(r.ci_half_width, 4)
              << " (n " << r.n << ")\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    if (credential_flag(argv[i])) {
      std::cerr << "error: credentials are not accepted as flags; set " << kApiKeyEnv << " instead\n";
      return 2;
    }
  }

  CLI::App app{"Revealed-preference rationality experiments on chat agents"};
  app.require_subcommand(1);

  RunConfig config;
  std::string domains = "all";
  std::string variant = "baseline";
  std::string mode = "max_at_least_half";
  std::string agent;
  int age = 0;
  std::string gender;

  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--domains", domains, "Comma-separated domains or 'all'")->capture_default_str();
    cmd->add_option("--variant", variant, "baseline, price_reframed or discrete")->capture_default_str();
    cmd->add_option("--trials", config.trials, "Trials per domain")->capture_default_str();
    cmd->add_option("--seed", config.seed, "Base seed")->capture_default_str();
    cmd->add_option("--out", config.out, "Output directory")->capture_default_str();
    cmd->add_option("--concurrency", config.concurrency, "Parallel trials or draws")->capture_default_str();
  };

  auto* gen = app.add_subcommand("generate", "Write one task sheet per domain and trial");
  common(gen);
  gen->add_option("--constraint-mode", mode, "max_at_least_half or max_at_most_half")->capture_default_str();
  gen->add_option("--rounds", config.rounds, "Rounds per sheet")->capture_default_str();

  auto* run = app.add_subcommand("run", "Run every trial that has no complete record");
  common(run);
  run->add_option("--agent", agent,
                  "Agent spec, e.g. cobb_douglas:alpha=0.5, refuse:rate=0.098/ces:rho=-1, "
                  "http:model=NAME")
      ->required();
  run->add_option("--endpoint-url", config.endpoint_url, "Chat completions URL for http agents");
  run->add_option("--temperature", config.temperature, "Sampling temperature in [0, 1]")->capture_default_str();
  run->add_flag("--stateless", config.stateless, "Ask each round in a fresh conversation");
  run->add_flag("!--no-comprehension", config.ask_comprehension, "Skip the comprehension questions");
  run->add_option("--age", age, "Demographic preamble: age");
  run->add_option("--gender", gender, "Demographic preamble: gender");

  auto* score = app.add_subcommand("score", "Score every dataset");
  score->add_option("--out", config.out, "Output directory")->capture_default_str();

  auto* power = app.add_subcommand("power", "Score uniform-random choices on the trial-0 sheets");
  common(power);
  power->add_option("--draws", config.draws, "Random trials per domain")->capture_default_str();

  auto* report = app.add_subcommand("report", "Write CDF, demand, summary and test tables");
  report->add_option("--out", config.out, "Output directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    config.domains = parse_domains(domains);
    config.variant = variant_from_string(variant);
    config.constraint_mode = constraint_mode_from_string(mode);
    config.agent = agent;
    if (age > 0 || !gender.empty()) {
      if (age <= 0 || gender.empty()) throw InvalidParameter("--age and --gender go together");
      config.demographics = Demographics{age, gender};
    }

    if (gen->parsed()) {
      const auto files = cmd_generate(config);
      std::cout << "wrote " << files.size() << " sheets to " << sheets_dir(config).string() << "\n";
    } else if (run->parsed()) {
      print_run(cmd_run(config));
    } else if (score->parsed()) {
      const auto reports = cmd_score(config);
      std::cout << "scored " << reports.size() << " datasets into " << scores_dir(config).string() << "\n";
    } else if (power->parsed()) {
      for (const auto& p : cmd_power(config)) {
        std::size_t perfect = 0;
        for (const auto& r : p.reports) perfect += r.ccei == 1.0;
        std::cout << to_string(p.domain) << " " << to_string(p.variant) << ": " << p.reports.size()
                  << " draws, " << perfect << " with CCEI 1\n";
      }
    } else if (report->parsed()) {
      print_rows(cmd_report(config));
      std::cout << "report written to " << report_dir(config).string() << "\n";
    }
  } catch (const MissingInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
