#include "stochain/harness.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <climits>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "stochain/approximation.hpp"
#include "stochain/errors.hpp"
#include "stochain/pattern.hpp"
#include "stochain/property_checks.hpp"
#include "stochain/rng.hpp"

namespace stochain {

namespace {

// ---------------------------------------------------------------------------
// Tokenized scenario lines.
// ---------------------------------------------------------------------------

struct Line {
  int number = 0;
  std::string raw;
  std::vector<std::string> tokens;
};

std::string rtrim(std::string s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.pop_back();
  }
  return s;
}

[[noreturn]] void fail(const Line& line, const std::string& what) {
  throw ParseError("line " + std::to_string(line.number) + ": " + what);
}

struct ScenarioText {
  std::vector<Line> lines;       // significant lines, tokenized
  std::vector<std::string> echo; // all non-blank lines, verbatim
};

ScenarioText split_lines(const std::string& text) {
  ScenarioText out;
  std::istringstream in(text);
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    raw = rtrim(raw);
    if (raw.empty()) continue;
    out.echo.push_back(raw);
    std::string stripped = raw;
    const std::size_t first = stripped.find_first_not_of(" \t");
    if (first == std::string::npos || stripped[first] == '#') continue;
    Line line;
    line.number = number;
    line.raw = raw;
    std::istringstream fields(raw);
    std::string tok;
    while (fields >> tok) line.tokens.push_back(tok);
    out.lines.push_back(std::move(line));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Typed scalars.
// ---------------------------------------------------------------------------

long parse_long(const Line& line, const std::string& tok) {
  char* end = nullptr;
  const long v = std::strtol(tok.c_str(), &end, 10);
  if (end == tok.c_str() || *end != '\0') {
    fail(line, "expected an integer, got '" + tok + "'");
  }
  return v;
}

std::uint64_t parse_u64(const Line& line, const std::string& tok) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(tok.c_str(), &end, 10);
  if (end == tok.c_str() || *end != '\0' || tok.front() == '-') {
    fail(line, "expected a nonnegative integer, got '" + tok + "'");
  }
  return v;
}

Real parse_real(const Line& line, const std::string& tok) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') {
    fail(line, "expected a number, got '" + tok + "'");
  }
  return v;
}

bool parse_bool(const Line& line, const std::string& tok) {
  if (tok == "true") return true;
  if (tok == "false") return false;
  fail(line, "expected true or false, got '" + tok + "'");
}

int parse_int(const Line& line, const std::string& tok) {
  const long v = parse_long(line, tok);
  if (v < INT_MIN || v > INT_MAX) fail(line, "integer out of range: '" + tok + "'");
  return static_cast<int>(v);
}

FlowMode parse_mode(const Line& line, const std::string& tok) {
  if (tok == "expected") return FlowMode::expected;
  if (tok == "sampled") return FlowMode::sampled;
  fail(line, "expected mode 'expected' or 'sampled', got '" + tok + "'");
}

// Named closed forms: constant(c), power(c,a) = c*(k+1)^-a, geometric(c,r).
Schedule parse_schedule(const Line& line, const std::string& tok) {
  const std::size_t open = tok.find('(');
  if (open == std::string::npos || tok.back() != ')') {
    fail(line, "expected a schedule like constant(0.5), got '" + tok + "'");
  }
  const std::string name = tok.substr(0, open);
  const std::string inner = tok.substr(open + 1, tok.size() - open - 2);
  std::vector<Real> args;
  std::string piece;
  std::istringstream parts(inner);
  while (std::getline(parts, piece, ',')) args.push_back(parse_real(line, piece));
  const auto want = [&](std::size_t n) {
    if (args.size() != n) {
      fail(line, "schedule " + name + " takes " + std::to_string(n) +
                     " argument(s), got " + std::to_string(args.size()));
    }
  };
  if (name == "constant") {
    want(1);
    return Schedule::constant(args[0]);
  }
  if (name == "power") {
    want(2);
    return Schedule::power(args[0], args[1]);
  }
  if (name == "geometric") {
    want(2);
    return Schedule::geometric(args[0], args[1]);
  }
  fail(line, "unknown schedule '" + name + "'");
}

// Agent indices are 1-based in scenario files and reports.
Index parse_agent(const Line& line, const std::string& tok) {
  const long v = parse_long(line, tok);
  if (v < 1) fail(line, "agent indices are 1-based, got '" + tok + "'");
  return static_cast<Index>(v - 1);
}

void expect_tokens(const Line& line, std::size_t n) {
  if (line.tokens.size() != n) {
    fail(line, "key '" + line.tokens[0] + "' takes " + std::to_string(n - 1) +
                   " value(s)");
  }
}

// ---------------------------------------------------------------------------
// Model sections. Each parses to a seed -> model factory so the CLI can
// rebuild the same hierarchy under an overridden seed.
// ---------------------------------------------------------------------------

using Builder = std::function<ModelPtr(std::uint64_t)>;

Builder parse_model_section(const std::vector<Line>& lines, std::size_t& i);

Builder parse_gossip(const std::vector<Line>& lines, std::size_t& i) {
  GossipParams p;
  std::vector<std::pair<int, std::pair<Index, Index>>> link_sites;
  const Line& head = lines[i++];
  while (true) {
    if (i >= lines.size()) fail(head, "model gossip is missing its 'end'");
    const Line& line = lines[i];
    const std::string& key = line.tokens[0];
    if (key == "end") {
      ++i;
      break;
    }
    if (key == "m") {
      expect_tokens(line, 2);
      p.m = static_cast<Index>(parse_long(line, line.tokens[1]));
    } else if (key == "normalize") {
      expect_tokens(line, 2);
      p.normalize = parse_bool(line, line.tokens[1]);
    } else if (key == "link") {
      expect_tokens(line, 4);
      const Index a = parse_agent(line, line.tokens[1]);
      const Index b = parse_agent(line, line.tokens[2]);
      p.links.push_back({a, b, parse_schedule(line, line.tokens[3])});
      link_sites.push_back({line.number, {a, b}});
    } else {
      fail(line, "unknown key '" + key + "' in model gossip");
    }
    ++i;
  }
  if (p.m < 2) fail(head, "model gossip needs 'm' of at least 2");
  if (p.links.empty()) fail(head, "model gossip needs at least one 'link'");
  for (const auto& [number, pair] : link_sites) {
    if (pair.first >= p.m || pair.second >= p.m) {
      throw ParseError("line " + std::to_string(number) +
                       ": link endpoint outside 1.." + std::to_string(p.m));
    }
  }
  return [p](std::uint64_t seed) { return std::make_shared<GossipModel>(p, seed); };
}

Builder parse_broadcast(const std::vector<Line>& lines, std::size_t& i) {
  BroadcastParams p;
  std::vector<int> edge_sites;
  const Line& head = lines[i++];
  while (true) {
    if (i >= lines.size()) fail(head, "model broadcast is missing its 'end'");
    const Line& line = lines[i];
    const std::string& key = line.tokens[0];
    if (key == "end") {
      ++i;
      break;
    }
    if (key == "m") {
      expect_tokens(line, 2);
      p.m = static_cast<Index>(parse_long(line, line.tokens[1]));
    } else if (key == "edge") {
      expect_tokens(line, 3);
      p.edges.push_back({parse_agent(line, line.tokens[1]),
                         parse_agent(line, line.tokens[2])});
      edge_sites.push_back(line.number);
    } else if (key == "mixing") {
      expect_tokens(line, 2);
      p.mixing = parse_schedule(line, line.tokens[1]);
    } else {
      fail(line, "unknown key '" + key + "' in model broadcast");
    }
    ++i;
  }
  if (p.m < 2) fail(head, "model broadcast needs 'm' of at least 2");
  if (p.edges.empty()) fail(head, "model broadcast needs at least one 'edge'");
  for (std::size_t e = 0; e < p.edges.size(); ++e) {
    if (p.edges[e].first >= p.m || p.edges[e].second >= p.m) {
      throw ParseError("line " + std::to_string(edge_sites[e]) +
                       ": edge endpoint outside 1.." + std::to_string(p.m));
    }
  }
  return [p](std::uint64_t seed) {
    return std::make_shared<BroadcastGossipModel>(p, seed);
  };
}

Builder parse_link_failure(const std::vector<Line>& lines, std::size_t& i) {
  const Line& head = lines[i++];
  std::optional<Schedule> failure;
  std::optional<Schedule> survival;
  Builder base;
  while (true) {
    if (i >= lines.size()) fail(head, "model link_failure is missing its 'end'");
    const Line& line = lines[i];
    const std::string& key = line.tokens[0];
    if (key == "end") {
      ++i;
      break;
    }
    if (key == "failure") {
      expect_tokens(line, 2);
      failure = parse_schedule(line, line.tokens[1]);
      ++i;
    } else if (key == "survival") {
      expect_tokens(line, 2);
      survival = parse_schedule(line, line.tokens[1]);
      ++i;
    } else if (key == "base") {
      if (base) fail(line, "model link_failure has two 'base' sections");
      base = parse_model_section(lines, i);
    } else {
      fail(line, "unknown key '" + key + "' in model link_failure");
    }
  }
  if (failure.has_value() == survival.has_value()) {
    fail(head, "model link_failure needs exactly one of 'failure' or 'survival'");
  }
  if (!base) fail(head, "model link_failure needs a 'base' section");
  const FailureSpec spec = failure ? FailureSpec::failure_probability(*failure)
                                   : FailureSpec::survival_probability(*survival);
  return [spec, base](std::uint64_t seed) {
    return std::make_shared<LinkFailureModel>(base(derive_seed({seed, 1})), spec,
                                              seed);
  };
}

// Models whose only parameter is the agent count (or nothing at all).
Builder parse_plain_model(const std::vector<Line>& lines, std::size_t& i,
                          const std::string& kind, bool wants_m) {
  const Line& head = lines[i++];
  Index m = 0;
  while (true) {
    if (i >= lines.size()) fail(head, "model " + kind + " is missing its 'end'");
    const Line& line = lines[i];
    const std::string& key = line.tokens[0];
    if (key == "end") {
      ++i;
      break;
    }
    if (wants_m && key == "m") {
      expect_tokens(line, 2);
      m = static_cast<Index>(parse_long(line, line.tokens[1]));
    } else {
      fail(line, "unknown key '" + key + "' in model " + kind);
    }
    ++i;
  }
  if (wants_m && m < (kind == "identity" ? 1 : 2)) {
    fail(head, "model " + kind + " needs 'm'");
  }
  if (kind == "permutation") {
    return [m](std::uint64_t seed) {
      return std::make_shared<PermutationModel>(m, seed);
    };
  }
  if (kind == "identity") {
    return [m](std::uint64_t) { return make_identity_model(m); };
  }
  if (kind == "simplex_row") {
    return [](std::uint64_t seed) {
      return std::make_shared<SimplexRowModel>(seed);
    };
  }
  // harmonic_pair
  return [](std::uint64_t) { return std::make_shared<HarmonicPairModel>(); };
}

Builder parse_model_section(const std::vector<Line>& lines, std::size_t& i) {
  const Line& head = lines[i];
  expect_tokens(head, 2);
  const std::string& kind = head.tokens[1];
  if (kind == "gossip") return parse_gossip(lines, i);
  if (kind == "broadcast") return parse_broadcast(lines, i);
  if (kind == "link_failure") return parse_link_failure(lines, i);
  if (kind == "permutation") return parse_plain_model(lines, i, kind, true);
  if (kind == "identity") return parse_plain_model(lines, i, kind, true);
  if (kind == "simplex_row") return parse_plain_model(lines, i, kind, false);
  if (kind == "harmonic_pair") return parse_plain_model(lines, i, kind, false);
  fail(head, "unknown model kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Analysis sections.
// ---------------------------------------------------------------------------

Vector parse_vector(const Line& line) {
  if (line.tokens.size() < 2) fail(line, "'" + line.tokens[0] + "' needs values");
  Vector v(static_cast<Index>(line.tokens.size() - 1));
  for (std::size_t t = 1; t < line.tokens.size(); ++t) {
    v(static_cast<Index>(t - 1)) = parse_real(line, line.tokens[t]);
  }
  return v;
}

std::vector<long> parse_long_list(const Line& line) {
  if (line.tokens.size() < 2) fail(line, "'" + line.tokens[0] + "' needs values");
  std::vector<long> v;
  for (std::size_t t = 1; t < line.tokens.size(); ++t) {
    v.push_back(parse_long(line, line.tokens[t]));
  }
  return v;
}

// Comma-separated 1-based member list, e.g. "1,2,3".
std::vector<Index> parse_members(const Line& line, const std::string& tok) {
  std::vector<Index> members;
  std::string piece;
  std::istringstream parts(tok);
  while (std::getline(parts, piece, ',')) {
    members.push_back(parse_agent(line, piece));
  }
  if (members.empty()) fail(line, "empty block in '" + tok + "'");
  return members;
}

template <typename Fn>
void parse_section(const std::vector<Line>& lines, std::size_t& i,
                   const std::string& label, Fn&& per_line) {
  const Line& head = lines[i++];
  while (true) {
    if (i >= lines.size()) fail(head, label + " is missing its 'end'");
    const Line& line = lines[i];
    if (line.tokens[0] == "end") {
      ++i;
      return;
    }
    per_line(line);
    ++i;
  }
}

Analysis parse_flow_graph(const std::vector<Line>& lines, std::size_t& i) {
  FlowGraphAnalysis a;
  parse_section(lines, i, "analysis flow_graph", [&](const Line& line) {
    const std::string& key = line.tokens[0];
    if (key == "horizon") {
      expect_tokens(line, 2);
      a.horizon = parse_long(line, line.tokens[1]);
    } else if (key == "mode") {
      expect_tokens(line, 2);
      a.mode = parse_mode(line, line.tokens[1]);
    } else if (key == "threshold") {
      expect_tokens(line, 2);
      a.threshold = parse_real(line, line.tokens[1]);
    } else {
      fail(line, "unknown key '" + key + "' in analysis flow_graph");
    }
  });
  return a;
}

Analysis parse_properties(const std::vector<Line>& lines, std::size_t& i) {
  PropertiesAnalysis a;
  parse_section(lines, i, "analysis properties", [&](const Line& line) {
    const std::string& key = line.tokens[0];
    if (key == "steps") {
      expect_tokens(line, 2);
      a.steps = parse_long(line, line.tokens[1]);
    } else if (key == "samples") {
      expect_tokens(line, 2);
      a.samples = parse_int(line, line.tokens[1]);
    } else {
      fail(line, "unknown key '" + key + "' in analysis properties");
    }
  });
  return a;
}

Analysis parse_m2(const std::vector<Line>& lines, std::size_t& i) {
  M2Analysis a;
  bool saw_x0 = false;
  const int head_number = lines[i].number;
  parse_section(lines, i, "analysis m2", [&](const Line& line) {
    const std::string& key = line.tokens[0];
    if (key == "x0") {
      a.x0 = parse_vector(line);
      saw_x0 = true;
    } else if (key == "t0") {
      expect_tokens(line, 2);
      a.t0 = parse_long(line, line.tokens[1]);
    } else if (key == "horizon") {
      expect_tokens(line, 2);
      a.horizon = parse_long(line, line.tokens[1]);
    } else if (key == "trials") {
      expect_tokens(line, 2);
      a.trials = parse_int(line, line.tokens[1]);
    } else {
      fail(line, "unknown key '" + key + "' in analysis m2");
    }
  });
  if (!saw_x0) {
    throw ParseError("line " + std::to_string(head_number) +
                     ": analysis m2 needs 'x0'");
  }
  return a;
}

Analysis parse_simulate(const std::vector<Line>& lines, std::size_t& i) {
  SimulateAnalysis a;
  bool saw_x0 = false;
  const int head_number = lines[i].number;
  parse_section(lines, i, "analysis simulate", [&](const Line& line) {
    const std::string& key = line.tokens[0];
    if (key == "x0") {
      a.x0 = parse_vector(line);
      saw_x0 = true;
    } else if (key == "t0") {
      expect_tokens(line, 2);
      a.t0 = parse_long(line, line.tokens[1]);
    } else if (key == "horizon") {
      expect_tokens(line, 2);
      a.horizon = parse_long(line, line.tokens[1]);
    } else if (key == "path") {
      expect_tokens(line, 2);
      a.path = parse_u64(line, line.tokens[1]);
    } else if (key == "csv") {
      expect_tokens(line, 2);
      a.csv = parse_bool(line, line.tokens[1]);
    } else {
      fail(line, "unknown key '" + key + "' in analysis simulate");
    }
  });
  if (!saw_x0) {
    throw ParseError("line " + std::to_string(head_number) +
                     ": analysis simulate needs 'x0'");
  }
  return a;
}

Analysis parse_verify(const std::vector<Line>& lines, std::size_t& i) {
  VerifyAnalysis a;
  parse_section(lines, i, "analysis verify", [&](const Line& line) {
    const std::string& key = line.tokens[0];
    if (key == "horizon") {
      expect_tokens(line, 2);
      a.config.empirical.horizon = parse_long(line, line.tokens[1]);
    } else if (key == "trials") {
      expect_tokens(line, 2);
      a.config.empirical.trials = parse_int(line, line.tokens[1]);
    } else if (key == "epsilon") {
      expect_tokens(line, 2);
      a.config.empirical.epsilon = parse_real(line, line.tokens[1]);
    } else if (key == "agreement") {
      expect_tokens(line, 2);
      a.config.empirical.agreement = parse_real(line, line.tokens[1]);
    } else if (key == "t0_set") {
      a.config.empirical.t0_set = parse_long_list(line);
    } else if (key == "flow_mode") {
      expect_tokens(line, 2);
      a.config.flow_mode = parse_mode(line, line.tokens[1]);
    } else if (key == "flow_horizon") {
      expect_tokens(line, 2);
      a.config.flow_horizon = parse_long(line, line.tokens[1]);
    } else if (key == "flow_threshold") {
      expect_tokens(line, 2);
      a.config.flow_threshold = parse_real(line, line.tokens[1]);
    } else if (key == "hypothesis_steps") {
      expect_tokens(line, 2);
      a.config.hypothesis_steps = parse_long(line, line.tokens[1]);
    } else if (key == "hypothesis_samples") {
      expect_tokens(line, 2);
      a.config.hypothesis_samples = parse_int(line, line.tokens[1]);
    } else {
      fail(line, "unknown key '" + key + "' in analysis verify");
    }
  });
  return a;
}

Analysis parse_approx_compare(const std::vector<Line>& lines, std::size_t& i) {
  ApproxCompareAnalysis a;
  bool saw_variant = false;
  const int head_number = lines[i].number;
  parse_section(lines, i, "analysis approx_compare", [&](const Line& line) {
    const std::string& key = line.tokens[0];
    if (key == "variant") {
      if (line.tokens.size() < 2) fail(line, "'variant' needs a kind");
      const std::string& kind = line.tokens[1];
      saw_variant = true;
      if (kind == "identity") {
        expect_tokens(line, 2);
        a.variant = ApproxCompareAnalysis::Variant::identity;
      } else if (kind == "prefix_identity") {
        expect_tokens(line, 3);
        a.variant = ApproxCompareAnalysis::Variant::prefix_identity;
        a.prefix_steps = parse_long(line, line.tokens[2]);
      } else if (kind == "diagonal") {
        if (line.tokens.size() < 3) {
          fail(line, "'variant diagonal' needs block lists like 1,2,3 4,5,6");
        }
        a.variant = ApproxCompareAnalysis::Variant::diagonal;
        for (std::size_t t = 2; t < line.tokens.size(); ++t) {
          a.blocks.push_back(parse_members(line, line.tokens[t]));
        }
      } else {
        fail(line, "unknown variant '" + kind + "'");
      }
    } else if (key == "l1_horizon") {
      expect_tokens(line, 2);
      a.l1_horizon = parse_long(line, line.tokens[1]);
    } else if (key == "mode") {
      expect_tokens(line, 2);
      a.mode = parse_mode(line, line.tokens[1]);
    } else if (key == "threshold") {
      expect_tokens(line, 2);
      a.threshold = parse_real(line, line.tokens[1]);
    } else if (key == "compare_patterns") {
      expect_tokens(line, 2);
      a.compare_patterns = parse_bool(line, line.tokens[1]);
    } else if (key == "horizon") {
      expect_tokens(line, 2);
      a.empirical.horizon = parse_long(line, line.tokens[1]);
    } else if (key == "trials") {
      expect_tokens(line, 2);
      a.empirical.trials = parse_int(line, line.tokens[1]);
    } else if (key == "epsilon") {
      expect_tokens(line, 2);
      a.empirical.epsilon = parse_real(line, line.tokens[1]);
    } else if (key == "agreement") {
      expect_tokens(line, 2);
      a.empirical.agreement = parse_real(line, line.tokens[1]);
    } else if (key == "t0_set") {
      a.empirical.t0_set = parse_long_list(line);
    } else {
      fail(line, "unknown key '" + key + "' in analysis approx_compare");
    }
  });
  if (!saw_variant) {
    throw ParseError("line " + std::to_string(head_number) +
                     ": analysis approx_compare needs 'variant'");
  }
  return a;
}

Analysis parse_analysis_section(const std::vector<Line>& lines, std::size_t& i) {
  const Line& head = lines[i];
  expect_tokens(head, 2);
  const std::string& type = head.tokens[1];
  if (type == "flow_graph") return parse_flow_graph(lines, i);
  if (type == "properties") return parse_properties(lines, i);
  if (type == "m2") return parse_m2(lines, i);
  if (type == "simulate") return parse_simulate(lines, i);
  if (type == "verify") return parse_verify(lines, i);
  if (type == "approx_compare") return parse_approx_compare(lines, i);
  fail(head, "unknown analysis type '" + type + "'");
}

bool valid_name(const std::string& name) {
  if (name.empty()) return false;
  for (char c : name) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') {
      return false;
    }
  }
  return true;
}

}  // namespace

Scenario parse_scenario_text(const std::string& text) {
  ScenarioText parsed = split_lines(text);
  const std::vector<Line>& lines = parsed.lines;
  if (lines.empty()) throw ParseError("scenario text has no content");

  Scenario sc;
  sc.echo_lines = std::move(parsed.echo);

  std::size_t i = 0;
  if (lines[0].tokens[0] != "scenario") {
    fail(lines[0], "a scenario must start with 'scenario <name>'");
  }
  expect_tokens(lines[0], 2);
  sc.name = lines[0].tokens[1];
  if (!valid_name(sc.name)) {
    fail(lines[0], "scenario name may use letters, digits, '_' and '-' only");
  }
  ++i;

  bool saw_seed = false;
  while (i < lines.size()) {
    const Line& line = lines[i];
    const std::string& key = line.tokens[0];
    if (key == "seed") {
      if (saw_seed) fail(line, "duplicate 'seed'");
      expect_tokens(line, 2);
      sc.seed = parse_u64(line, line.tokens[1]);
      saw_seed = true;
      ++i;
    } else if (key == "model") {
      if (sc.build_model) fail(line, "a scenario has exactly one model");
      sc.build_model = parse_model_section(lines, i);
    } else if (key == "analysis") {
      sc.analyses.push_back(parse_analysis_section(lines, i));
    } else {
      fail(line, "unknown key '" + key + "'");
    }
  }
  if (!sc.build_model) throw ParseError("scenario has no model section");
  sc.model = sc.build_model(sc.seed);
  return sc;
}

Scenario parse_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read scenario file: " + path);
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_scenario_text(text.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Report rendering.
// ---------------------------------------------------------------------------

namespace {

std::string fmt(Real v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* bstr(bool b) { return b ? "true" : "false"; }

std::string pair_label(Index i, Index j) {
  return "{" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "}";
}

void put_vector(std::ostream& out, const char* key, const Vector& v) {
  out << key;
  for (Index i = 0; i < v.size(); ++i) out << ' ' << fmt(v(i));
  out << '\n';
}

const char* analysis_name(const Analysis& a) {
  static const char* names[] = {"flow_graph", "properties",     "m2",
                                "simulate",   "verify",         "approx_compare"};
  return names[a.index()];
}

void render_feedback(std::ostream& out, const ChainModel& model,
                     const PropertiesAnalysis& a, bool weak) {
  const char* key = weak ? "gamma_weak" : "gamma_strong";
  FeedbackReport rep = [&] {
    try {
      out << key << "_estimate closed_form\n";
      return weak ? weak_feedback_coefficient(model, 0, a.steps,
                                              FeedbackEstimate::closed_form())
                  : feedback_coefficient(model, 0, a.steps,
                                         FeedbackEstimate::closed_form());
    } catch (const NoClosedForm&) {
      out << key << "_estimate monte_carlo " << a.samples << "\n";
      const FeedbackEstimate est = FeedbackEstimate::monte_carlo(a.samples);
      return weak ? weak_feedback_coefficient(model, 0, a.steps, est)
                  : feedback_coefficient(model, 0, a.steps, est);
    }
  }();
  const std::optional<Real>& gamma = weak ? rep.gamma_weak : rep.gamma_strong;
  out << key << ' ' << fmt(*gamma) << '\n';
  out << key << "_vacuous " << bstr(rep.vacuous) << '\n';
  if (rep.minimizer) {
    out << key << "_minimizer step " << rep.minimizer->k << " pair "
        << pair_label(rep.minimizer->i, rep.minimizer->j) << " left "
        << fmt(rep.minimizer->left) << " right " << fmt(rep.minimizer->right)
        << '\n';
  }
  out << key << "_witnesses " << rep.witnesses.size() << '\n';
  for (const FeedbackWitness& w : rep.witnesses) {
    out << key << "_witness step " << w.k << " pair " << pair_label(w.i, w.j)
        << " left " << fmt(w.left) << " right " << fmt(w.right) << '\n';
  }
  if (rep.max_left_se > 0.0 || rep.max_right_se > 0.0) {
    out << key << "_max_se left " << fmt(rep.max_left_se) << " right "
        << fmt(rep.max_right_se) << '\n';
  }
}

struct AnalysisContext {
  const Scenario& scenario;
  const RunOptions& options;
  std::uint64_t seed;
  std::size_t index;  // 1-based analysis index
  std::ostream& out;
  long long& steps;
  bool& mismatch;
  std::vector<std::string>& files;
};

void render_empirical(std::ostream& out, const EmpiricalPatternReport& rep,
                      const char* prefix) {
  out << prefix << "runs " << rep.runs << '\n';
  out << prefix << "stability " << fmt(rep.stability_fraction) << '\n';
  std::string key = std::string(prefix) + "coordinate_stability";
  put_vector(out, key.c_str(), rep.coordinate_stability);
  const Index m = rep.evidence.rows();
  for (Index i = 0; i < m; ++i) {
    for (Index j = i + 1; j < m; ++j) {
      out << prefix << "evidence " << pair_label(i, j) << ' '
          << fmt(rep.evidence(i, j)) << '\n';
    }
  }
}

long long empirical_step_count(const EmpiricalPatternOptions& o, Index m) {
  long long per_run = 0;
  for (long t0 : o.t0_set) per_run += o.horizon - t0;
  return per_run * m * o.trials;
}

void run_flow_graph(AnalysisContext& ctx, const FlowGraphAnalysis& a) {
  const ChainModel& model = *ctx.scenario.model;
  const PatternPrediction pred =
      predict_ergodicity_pattern(model, a.mode, a.horizon, a.threshold);
  std::ostream& out = ctx.out;
  out << "mode " << to_string(a.mode) << '\n';
  out << "horizon " << a.horizon << '\n';
  out << "threshold " << fmt(a.threshold) << '\n';
  out << "pattern " << pred.pattern.describe() << '\n';
  out << "modes_agree " << bstr(pred.modes_agree) << '\n';
  if (pred.cross_check) {
    out << "cross_check " << pred.cross_check->describe() << '\n';
  }
  out << "edges " << pred.graph.edges().size() << '\n';
  for (const FlowEdge& e : pred.graph.edges()) {
    out << "edge " << pair_label(e.i, e.j) << ' ' << to_string(e.provenance)
        << '\n';
  }
  ctx.steps += a.horizon;
}

void run_properties(AnalysisContext& ctx, const PropertiesAnalysis& a) {
  const ChainModel& model = *ctx.scenario.model;
  std::ostream& out = ctx.out;
  out << "steps_examined " << a.steps << '\n';
  try {
    const SteadyStateReport ss = find_common_steady_state(model, 0, a.steps);
    if (ss.pi) {
      out << "steady_state present\n";
      put_vector(out, "pi", *ss.pi);
      out << "pi_positive " << bstr(ss.positive) << '\n';
      out << "pi_min " << fmt(ss.pi_min) << '\n';
      Real worst = 0.0;
      for (Real r : ss.residuals) worst = std::max(worst, r);
      out << "max_residual " << fmt(worst) << '\n';
    } else {
      out << "steady_state absent\n";
    }
  } catch (const NoClosedForm&) {
    out << "steady_state no_closed_form\n";
  }
  render_feedback(out, model, a, true);
  render_feedback(out, model, a, false);
  ctx.steps += a.steps;
}

void run_m2(AnalysisContext& ctx, const M2Analysis& a) {
  const ChainModel& model = *ctx.scenario.model;
  const M2Report rep = m2_diagnostic(model, a.x0, a.t0, a.horizon, a.trials);
  std::ostream& out = ctx.out;
  put_vector(out, "x0", a.x0);
  out << "t0 " << a.t0 << '\n';
  out << "horizon " << a.horizon << '\n';
  out << "trials " << a.trials << '\n';
  out << "partial_series " << fmt(rep.partial_series) << '\n';
  out << "verdict " << to_string(rep.verdict) << '\n';
  out << "h_samples " << rep.h_samples << '\n';
  for (std::size_t t = 0; t < rep.window_sums.size(); ++t) {
    out << "window " << t << ' ' << fmt(rep.window_sums[t]) << '\n';
  }
  ctx.steps += static_cast<long long>(a.horizon - a.t0) * a.trials;
}

void run_simulate(AnalysisContext& ctx, const SimulateAnalysis& a) {
  const ChainModel& model = *ctx.scenario.model;
  const TrajectoryReport rep =
      run_trajectory(model, a.x0, a.t0, a.horizon, a.path);
  std::ostream& out = ctx.out;
  put_vector(out, "x0", a.x0);
  out << "t0 " << a.t0 << '\n';
  out << "horizon " << a.horizon << '\n';
  out << "path " << a.path << '\n';
  out << "window_start " << rep.window_start << '\n';
  put_vector(out, "x_final", rep.x_final);
  for (std::size_t c = 0; c < rep.checkpoint_steps.size(); ++c) {
    out << "checkpoint " << rep.checkpoint_steps[c] << " spread "
        << fmt(rep.spread_series[c]) << '\n';
  }
  const Index m = model.dim();
  for (Index i = 0; i < m; ++i) {
    for (Index j = i + 1; j < m; ++j) {
      out << "pair_gap " << pair_label(i, j) << ' ' << fmt(rep.pair_gaps(i, j))
          << '\n';
    }
  }
  for (Index i = 0; i < m; ++i) {
    out << "cauchy_gap " << (i + 1) << ' ' << fmt(rep.cauchy_gaps(i)) << '\n';
  }
  if (a.csv) {
    const std::string name = ctx.scenario.name + "." +
                             std::to_string(ctx.index) + ".trajectory.csv";
    out << "csv " << name << '\n';
    if (!ctx.options.out_dir.empty()) {
      const std::filesystem::path path =
          std::filesystem::path(ctx.options.out_dir) / name;
      std::ofstream file(path, std::ios::binary);
      if (!file) throw Error("cannot write trajectory file: " + path.string());
      write_trajectory_csv(rep, file);
      ctx.files.push_back(name);
    }
  } else {
    out << "csv none\n";
  }
  ctx.steps += a.horizon - a.t0;
}

void run_verify(AnalysisContext& ctx, const VerifyAnalysis& a) {
  const ChainModel& model = *ctx.scenario.model;
  VerifyConfig config = a.config;
  config.empirical.seed_base =
      derive_seed({ctx.seed, static_cast<std::uint64_t>(ctx.index)});
  config.empirical.workers = ctx.options.workers;
  const VerificationReport rep = verify_prediction(model, config);

  std::ostream& out = ctx.out;
  out << "flow_mode " << to_string(config.flow_mode) << '\n';
  out << "flow_horizon " << config.flow_horizon << '\n';
  out << "horizon " << config.empirical.horizon << '\n';
  out << "trials " << config.empirical.trials << '\n';
  out << "epsilon " << fmt(config.empirical.epsilon) << '\n';
  out << "agreement " << fmt(config.empirical.agreement) << '\n';
  out << "t0_set";
  for (long t0 : config.empirical.t0_set) out << ' ' << t0;
  out << '\n';
  out << "predicted " << rep.predicted.describe() << '\n';
  out << "empirical " << rep.empirical.describe() << '\n';
  out << "match " << bstr(rep.match) << '\n';
  out << "modes_agree " << bstr(rep.modes_agree) << '\n';
  const EmpiricalPatternReport flat{rep.empirical, rep.runs, rep.evidence,
                                    rep.coordinate_stability,
                                    rep.stability_fraction};
  render_empirical(out, flat, "");
  out << "warnings " << rep.warnings.size() << '\n';
  for (const HypothesisWarning& w : rep.warnings) {
    out << "warning " << w.message << '\n';
  }
  if (!rep.match) ctx.mismatch = true;
  ctx.steps += empirical_step_count(config.empirical, model.dim()) +
               config.flow_horizon;
}

void run_approx_compare(AnalysisContext& ctx, const ApproxCompareAnalysis& a) {
  const ModelPtr& base = ctx.scenario.model;
  std::ostream& out = ctx.out;
  ModelPtr other;
  switch (a.variant) {
    case ApproxCompareAnalysis::Variant::identity:
      out << "variant identity\n";
      other = make_identity_model(base->dim());
      break;
    case ApproxCompareAnalysis::Variant::prefix_identity:
      out << "variant prefix_identity " << a.prefix_steps << '\n';
      other = make_prefix_identity(base, a.prefix_steps);
      break;
    case ApproxCompareAnalysis::Variant::diagonal: {
      const ErgodicityPattern pattern(a.blocks, base->dim());
      out << "variant diagonal " << pattern.describe() << '\n';
      other = make_diagonal_approximation(base, pattern);
      break;
    }
  }

  const ChainDistanceReport dist =
      l1_chain_distance(*base, *other, a.l1_horizon, a.mode, a.threshold);
  out << "l1_mode " << to_string(a.mode) << '\n';
  out << "l1_horizon " << a.l1_horizon << '\n';
  out << "l1_total " << fmt(dist.total()) << '\n';
  out << "l1_verdict " << to_string(dist.verdict) << '\n';
  out << "l1_provenance " << to_string(dist.provenance) << '\n';
  for (std::size_t t = 0; t < dist.window_sums.size(); ++t) {
    out << "l1_window " << t << ' ' << fmt(dist.window_sums[t]) << '\n';
  }
  ctx.steps += a.l1_horizon;

  out << "compare_patterns " << bstr(a.compare_patterns) << '\n';
  if (a.compare_patterns) {
    EmpiricalPatternOptions options = a.empirical;
    options.seed_base =
        derive_seed({ctx.seed, static_cast<std::uint64_t>(ctx.index)});
    options.workers = ctx.options.workers;
    const EmpiricalPatternReport base_rep =
        empirical_pattern_report(*base, options);
    const EmpiricalPatternReport other_rep =
        empirical_pattern_report(*other, options);
    out << "base_pattern " << base_rep.pattern.describe() << '\n';
    out << "variant_pattern " << other_rep.pattern.describe() << '\n';
    out << "patterns_equal " << bstr(base_rep.pattern == other_rep.pattern)
        << '\n';
    ctx.steps += 2 * empirical_step_count(options, base->dim());
  }
}

}  // namespace

RunReport run_scenario(const Scenario& scenario, const RunOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  const std::uint64_t seed = options.seed_override.value_or(scenario.seed);
  Scenario reseeded;
  const Scenario* active = &scenario;
  if (options.seed_override && *options.seed_override != scenario.seed) {
    if (!scenario.build_model) {
      throw Error("scenario '" + scenario.name + "' cannot be reseeded");
    }
    reseeded = scenario;
    reseeded.seed = seed;
    reseeded.model = scenario.build_model(seed);
    active = &reseeded;
  }
  if (!active->model) {
    throw Error("scenario '" + scenario.name + "' has no model");
  }
  if (options.workers < 1) {
    throw Error("worker count must be at least 1");
  }
  if (!options.out_dir.empty()) {
    std::filesystem::create_directories(options.out_dir);
  }

  std::ostringstream body;
  body << "stochain-report 1\n";
  body << "scenario " << active->name << '\n';
  body << "seed " << seed << '\n';
  body << "model " << active->model->describe() << '\n';
  for (const std::string& line : active->echo_lines) {
    body << "| " << line << '\n';
  }

  long long steps = 0;
  bool mismatch = false;
  std::vector<std::string> files;

  for (std::size_t idx = 0; idx < active->analyses.size(); ++idx) {
    const Analysis& analysis = active->analyses[idx];
    body << "analysis " << (idx + 1) << ' ' << analysis_name(analysis) << '\n';
    AnalysisContext ctx{*active, options, seed,     idx + 1,
                        body,    steps,   mismatch, files};
    try {
      std::visit(
          [&](const auto& a) {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, FlowGraphAnalysis>) {
              run_flow_graph(ctx, a);
            } else if constexpr (std::is_same_v<T, PropertiesAnalysis>) {
              run_properties(ctx, a);
            } else if constexpr (std::is_same_v<T, M2Analysis>) {
              run_m2(ctx, a);
            } else if constexpr (std::is_same_v<T, SimulateAnalysis>) {
              run_simulate(ctx, a);
            } else if constexpr (std::is_same_v<T, VerifyAnalysis>) {
              run_verify(ctx, a);
            } else {
              run_approx_compare(ctx, a);
            }
          },
          analysis);
    } catch (const AnalysisError&) {
      throw;
    } catch (const Error& e) {
      throw AnalysisError("analysis " + std::to_string(idx + 1) + " (" +
                          analysis_name(analysis) + ") of scenario " +
                          active->name + ": " + e.what());
    }
    body << "end analysis " << (idx + 1) << '\n';
  }

  body << "steps_total " << steps << '\n';
  body << "end report\n";

  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - started);

  RunReport report;
  report.name = active->name;
  report.body = body.str();
  report.timing = "timing total_ms " + std::to_string(elapsed.count()) + "\n";
  report.any_mismatch = mismatch;
  report.total_steps = steps;
  report.files = std::move(files);

  if (!options.out_dir.empty()) {
    const std::filesystem::path path =
        std::filesystem::path(options.out_dir) / (report.name + ".report.txt");
    std::ofstream file(path, std::ios::binary);
    if (!file) throw Error("cannot write report file: " + path.string());
    file << report_file_text(report);
    report.files.push_back(report.name + ".report.txt");
  }
  return report;
}

RunReport run_scenario_file(const std::string& path, const RunOptions& options) {
  return run_scenario(parse_scenario_file(path), options);
}

std::string report_file_text(const RunReport& report) {
  const std::string tail = "end report\n";
  if (report.timing.empty()) return report.body;
  if (report.body.size() >= tail.size() &&
      report.body.compare(report.body.size() - tail.size(), tail.size(),
                          tail) == 0) {
    return report.body.substr(0, report.body.size() - tail.size()) +
           report.timing + tail;
  }
  return report.body + report.timing;
}

// ---------------------------------------------------------------------------
// Bundled scenarios.
// ---------------------------------------------------------------------------

namespace {

struct BundledScenario {
  ScenarioInfo info;
  std::string text;
};

const std::vector<BundledScenario>& bundle() {
  static const std::vector<BundledScenario> scenarios = {
      {{"gossip_two_cliques",
        "two gossip cliques with fading cross links: predicted classes match "
        "measured classes"},
       R"(# Two fully connected triangles; the only cross link fades like 2^-k.
scenario gossip_two_cliques
seed 42
model gossip
  m 6
  link 1 2 constant(1)
  link 1 3 constant(1)
  link 2 3 constant(1)
  link 4 5 constant(1)
  link 4 6 constant(1)
  link 5 6 constant(1)
  link 3 4 geometric(1,0.5)
end
analysis flow_graph
  horizon 4096
  mode expected
end
analysis verify
  horizon 4000
  trials 100
  epsilon 1e-6
end
)"},
      {{"harmonic_oracle",
        "harmonic averaging pair: closed-form gap decay and divergence from "
        "the identity chain"},
       R"(# Two agents averaging ever more weakly; the gap shrinks like 1/K^2.
scenario harmonic_oracle
seed 7
model harmonic_pair
end
analysis simulate
  x0 1 0
  t0 1
  horizon 101
  csv true
end
analysis approx_compare
  variant identity
  l1_horizon 16384
end
analysis m2
  x0 1 0
  t0 1
  horizon 4097
  trials 1
end
)"},
      {{"harmonic_prefix_patch",
        "finite prefix replaced by identity: ergodicity classes survive "
        "l1-small edits"},
       R"(# Replacing the first five steps by identity must not change the classes.
scenario harmonic_prefix_patch
seed 11
model harmonic_pair
end
analysis approx_compare
  variant prefix_identity 5
  l1_horizon 8192
  compare_patterns true
  horizon 16384
  trials 1
  t0_set 0 7
  epsilon 1e-6
end
)"},
      {{"two_clique_diagonal",
        "diagonal (cut-zeroing) approximation of the two-clique chain keeps "
        "its classes"},
       R"(# Zeroing cross-clique weights and folding them into the diagonal.
scenario two_clique_diagonal
seed 13
model gossip
  m 6
  link 1 2 constant(1)
  link 1 3 constant(1)
  link 2 3 constant(1)
  link 4 5 constant(1)
  link 4 6 constant(1)
  link 5 6 constant(1)
  link 3 4 geometric(1,0.5)
end
analysis approx_compare
  variant diagonal 1,2,3 4,5,6
  l1_horizon 4096
  compare_patterns true
  horizon 2000
  trials 20
  epsilon 1e-6
end
)"},
      {{"broadcast_ring_consensus",
        "broadcast ring with slowly fading gains: one ergodicity class, "
        "consensus"},
       R"(# Neighbors chase a uniformly chosen broadcaster. Gains decay like
# 0.9*(k+1)^-0.8, whose sum diverges, so mass keeps flowing and the
# whole ring agrees.
scenario broadcast_ring_consensus
seed 17
model broadcast
  m 5
  edge 1 2
  edge 2 3
  edge 3 4
  edge 4 5
  edge 5 1
  mixing power(0.9,0.8)
end
analysis flow_graph
  horizon 4096
  mode expected
end
analysis verify
  horizon 100000
  trials 10
  epsilon 1e-4
  agreement 0.9
end
)"},
      {{"broadcast_ring_fadeout",
        "broadcast ring with (k+1)^-2 gains: stable coordinates, no merging"},
       R"(# Same ring, but gains decay like 0.9*(k+1)^-2: total motion is
# summable, every coordinate settles, and no two agents merge.
scenario broadcast_ring_fadeout
seed 19
model broadcast
  m 5
  edge 1 2
  edge 2 3
  edge 3 4
  edge 4 5
  edge 5 1
  mixing power(0.9,2)
end
analysis flow_graph
  horizon 4096
  mode expected
end
analysis verify
  horizon 300000
  trials 4
  epsilon 1e-4
  t0_set 0
end
)"},
      {{"link_failure_consensus",
        "gossip under constant-rate link failures: consensus survives p = 0.5"},
       R"(# Every transmitted weight is dropped with probability one half,
# independently per direction and step; the surviving flow still mixes.
scenario link_failure_consensus
seed 23
model link_failure
  failure constant(0.5)
  base gossip
    m 4
    link 1 2 constant(1)
    link 1 3 constant(1)
    link 1 4 constant(1)
    link 2 3 constant(1)
    link 2 4 constant(1)
    link 3 4 constant(1)
  end
end
analysis properties
  steps 8
  samples 2000
end
analysis verify
  horizon 2000
  trials 20
  epsilon 1e-6
end
)"},
      {{"link_failure_fadeout",
        "gossip whose link survival decays like 2^-k: classes collapse to "
        "singletons"},
       R"(# Link survival probability halves every step, so exchanges dry up
# and the agents freeze at distinct values.
scenario link_failure_fadeout
seed 29
model link_failure
  survival geometric(1,0.5)
  base gossip
    m 3
    link 1 2 constant(1)
    link 1 3 constant(1)
    link 2 3 constant(1)
  end
end
analysis flow_graph
  horizon 4096
  mode expected
end
analysis verify
  horizon 2000
  trials 20
  epsilon 1e-6
end
)"},
      {{"permutation_counterexample",
        "uniform random permutations: zero weak feedback, mass never settles"},
       R"(# Pure relabeling: flows look enormous, yet nothing ever mixes.
scenario permutation_counterexample
seed 31
model permutation
  m 3
end
analysis properties
  steps 8
end
analysis verify
  horizon 2000
  trials 20
  epsilon 1e-6
end
)"},
      {{"simplex_counterexample",
        "independent simplex rows: no positive common steady state, middle "
        "agent oscillates"},
       R"(# Agents 1 and 3 hold fixed values; agent 2 is resampled from a
# random convex combination every step and never converges.
scenario simplex_counterexample
seed 37
model simplex_row
end
analysis properties
  steps 8
end
analysis simulate
  x0 0 0.5 1
  t0 0
  horizon 2000
  csv true
end
analysis verify
  horizon 2000
  trials 20
  epsilon 1e-6
end
)"},
      {{"m2_two_cliques",
        "weighted pair-gap series of the two-clique chain stays bounded"},
       R"(# The gram-weighted sum of squared pair gaps should level off when
# within-clique consensus is reached.
scenario m2_two_cliques
seed 41
model gossip
  m 6
  link 1 2 constant(1)
  link 1 3 constant(1)
  link 2 3 constant(1)
  link 4 5 constant(1)
  link 4 6 constant(1)
  link 5 6 constant(1)
  link 3 4 geometric(1,0.5)
end
analysis m2
  x0 1 0 0 0 0 0
  t0 0
  horizon 16384
  trials 200
end
)"},
  };
  return scenarios;
}

}  // namespace

const std::vector<ScenarioInfo>& list_scenarios() {
  static const std::vector<ScenarioInfo> infos = [] {
    std::vector<ScenarioInfo> out;
    for (const BundledScenario& s : bundle()) out.push_back(s.info);
    return out;
  }();
  return infos;
}

bool is_bundled_scenario(const std::string& name) {
  for (const BundledScenario& s : bundle()) {
    if (s.info.name == name) return true;
  }
  return false;
}

const std::string& bundled_scenario_text(const std::string& name) {
  for (const BundledScenario& s : bundle()) {
    if (s.info.name == name) return s.text;
  }
  throw Error("no bundled scenario named '" + name + "'");
}

}  // namespace stochain
