#pragma once

// Reader/writer for the line-oriented textual POMDP interchange format
// (discount:/values:/states:/actions:/observations:/start:/T:/O:/R:).
// The writer emits one sparse line per nonzero entry; the reader additionally
// accepts name lists, `*` wildcards, full-row and full-matrix forms and the
// uniform/identity keywords. Rewards must be expressible as R(s,a): entries
// that differ across (s',o) for a fixed (s,a) are rejected.

#include <cctype>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "agr/errors.hpp"
#include "agr/pomdp.hpp"

namespace agr {

inline void write_pomdp(const TabularPOMDP& m, std::ostream& out) {
  out << "# tabular POMDP, one line per nonzero entry\n";
  out << "# horizon: " << m.horizon() << "\n";
  out << std::setprecision(17);
  out << "discount: " << m.discount() << "\n";
  out << "values: reward\n";
  out << "states: " << m.num_states() << "\n";
  out << "actions: " << m.num_actions() << "\n";
  out << "observations: " << m.num_observations() << "\n";
  out << "start:";
  for (double p : m.initial_belief().probs()) out << " " << p;
  out << "\n\n";
  for (std::size_t a = 0; a < m.num_actions(); ++a)
    for (std::size_t s = 0; s < m.num_states(); ++s)
      for (const auto& e : m.transition_row(s, a))
        out << "T: " << a << " : " << s << " : " << e.index << " " << e.prob
            << "\n";
  for (std::size_t a = 0; a < m.num_actions(); ++a)
    for (std::size_t s2 = 0; s2 < m.num_states(); ++s2)
      for (const auto& e : m.observation_row(a, s2))
        out << "O: " << a << " : " << s2 << " : " << e.index << " " << e.prob
            << "\n";
  for (std::size_t a = 0; a < m.num_actions(); ++a)
    for (std::size_t s = 0; s < m.num_states(); ++s)
      if (m.reward(s, a) != 0.0)
        out << "R: " << a << " : " << s << " : * : * " << m.reward(s, a)
            << "\n";
}

namespace detail {

struct PomdpParser {
  explicit PomdpParser(std::istream& in) : in_(in) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw FormatError("line " + std::to_string(line_no_) + ": " + msg);
  }

  static std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  // Next token after `pos`, advancing past it; tokens are separated by
  // whitespace or ':' (colons are tokens themselves).
  static std::vector<std::string> tokenize(const std::string& s) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : s) {
      if (std::isspace(static_cast<unsigned char>(c)) || c == ':') {
        if (!cur.empty()) tokens.push_back(cur);
        cur.clear();
        if (c == ':') tokens.emplace_back(":");
      } else {
        cur.push_back(c);
      }
    }
    if (!cur.empty()) tokens.push_back(cur);
    return tokens;
  }

  bool next_line(std::string& out) {
    std::string raw;
    while (std::getline(in_, raw)) {
      ++line_no_;
      std::string t = trim(raw);
      if (t.rfind("# horizon:", 0) == 0) {
        horizon_ = parse_count(trim(t.substr(10)), "horizon");
        continue;
      }
      if (t.empty() || t[0] == '#') continue;
      out = t;
      return true;
    }
    return false;
  }

  std::size_t parse_count(const std::string& tok, const char* what) {
    try {
      std::size_t pos = 0;
      long long v = std::stoll(tok, &pos);
      if (pos != tok.size() || v <= 0) fail(std::string("bad ") + what);
      return static_cast<std::size_t>(v);
    } catch (const std::logic_error&) {
      fail(std::string("bad ") + what + " '" + tok + "'");
    }
  }

  double parse_prob(const std::string& tok) {
    try {
      std::size_t pos = 0;
      double v = std::stod(tok, &pos);
      if (pos != tok.size()) fail("bad number '" + tok + "'");
      return v;
    } catch (const std::logic_error&) {
      fail("bad number '" + tok + "'");
    }
  }

  // Resolves a state/action/observation token to indices; '*' covers all.
  std::vector<std::size_t> resolve(const std::string& tok,
                                   const std::vector<std::string>& names,
                                   std::size_t count, const char* what) {
    if (tok == "*") {
      std::vector<std::size_t> all(count);
      for (std::size_t i = 0; i < count; ++i) all[i] = i;
      return all;
    }
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == tok) return {i};
    try {
      std::size_t pos = 0;
      long long v = std::stoll(tok, &pos);
      if (pos == tok.size() && v >= 0 && static_cast<std::size_t>(v) < count)
        return {static_cast<std::size_t>(v)};
    } catch (const std::logic_error&) {
    }
    fail(std::string("unknown ") + what + " '" + tok + "'");
  }

  std::istream& in_;
  std::size_t line_no_ = 0;
  std::size_t horizon_ = 0;
};

}  // namespace detail

// Parses the interchange format. `default_horizon` applies unless the file
// carries a `# horizon:` annotation.
inline TabularPOMDP read_pomdp(std::istream& in,
                               std::size_t default_horizon = 30) {
  detail::PomdpParser p(in);
  double discount = -1.0;
  double value_sign = 1.0;
  std::size_t S = 0, A = 0, Z = 0;
  std::vector<std::string> state_names, action_names, obs_names;
  std::vector<double> start;
  bool start_uniform = false;
  long long start_state = -1;

  struct Triple {
    std::size_t a, row, col;
    double p;
  };
  std::vector<Triple> t_entries, o_entries;
  std::map<std::pair<std::size_t, std::size_t>, double> rewards;

  auto parse_header_list = [&](const std::vector<std::string>& tokens,
                               std::vector<std::string>& names,
                               std::size_t& count) {
    if (tokens.size() == 3 && tokens[2].find_first_not_of("0123456789") ==
                                  std::string::npos) {
      count = p.parse_count(tokens[2], "count");
    } else {
      names.assign(tokens.begin() + 2, tokens.end());
      count = names.size();
      if (count == 0) p.fail("empty name list");
    }
  };

  auto row_from_stream = [&](std::size_t n) {
    std::string line;
    if (!p.next_line(line)) p.fail("expected a probability row");
    auto tokens = detail::PomdpParser::tokenize(line);
    if (tokens.size() != n) p.fail("expected " + std::to_string(n) + " numbers");
    std::vector<double> row(n);
    for (std::size_t i = 0; i < n; ++i) row[i] = p.parse_prob(tokens[i]);
    return row;
  };

  std::string line;
  while (p.next_line(line)) {
    auto tokens = detail::PomdpParser::tokenize(line);
    if (tokens.empty()) continue;
    const std::string& head = tokens[0];

    if (head == "discount" && tokens.size() >= 3) {
      discount = p.parse_prob(tokens[2]);
    } else if (head == "values" && tokens.size() >= 3) {
      if (tokens[2] == "cost")
        value_sign = -1.0;
      else if (tokens[2] != "reward")
        p.fail("values must be reward or cost");
    } else if (head == "states") {
      parse_header_list(tokens, state_names, S);
    } else if (head == "actions") {
      parse_header_list(tokens, action_names, A);
    } else if (head == "observations") {
      parse_header_list(tokens, obs_names, Z);
    } else if (head == "start") {
      if (S == 0) p.fail("start before states");
      if (tokens.size() == 3 && tokens[2] == "uniform") {
        start_uniform = true;
      } else if (tokens.size() == 3 &&
                 tokens[2].find_first_not_of("0123456789") !=
                     std::string::npos) {
        auto states = p.resolve(tokens[2], state_names, S, "state");
        start_state = static_cast<long long>(states[0]);
      } else if (tokens.size() == S + 2) {
        start.resize(S);
        for (std::size_t i = 0; i < S; ++i)
          start[i] = p.parse_prob(tokens[i + 2]);
      } else if (tokens.size() == 3) {
        auto states = p.resolve(tokens[2], state_names, S, "state");
        start_state = static_cast<long long>(states[0]);
      } else {
        p.fail("malformed start line");
      }
    } else if (head == "T") {
      if (S == 0 || A == 0) p.fail("T before states/actions");
      // forms: T: a : s : s' p | T: a : s : s' \n p | T: a : s (+row)
      //        T: a (+matrix | uniform | identity)
      std::vector<std::string> parts;
      std::vector<std::size_t> colons;
      for (std::size_t i = 1; i < tokens.size(); ++i)
        if (tokens[i] == ":") colons.push_back(i);
      auto actions = p.resolve(tokens.size() > 2 ? tokens[2] : "",
                               action_names, A, "action");
      if (colons.size() >= 3) {
        auto rows = p.resolve(tokens[4], state_names, S, "state");
        auto cols = p.resolve(tokens[6], state_names, S, "state");
        double prob = tokens.size() > 7 ? p.parse_prob(tokens[7])
                                        : row_from_stream(1)[0];
        for (auto a : actions)
          for (auto s : rows)
            for (auto s2 : cols) t_entries.push_back({a, s, s2, prob});
      } else if (colons.size() == 2) {
        auto rows = p.resolve(tokens[4], state_names, S, "state");
        auto row = row_from_stream(S);
        for (auto a : actions)
          for (auto s : rows)
            for (std::size_t s2 = 0; s2 < S; ++s2)
              t_entries.push_back({a, s, s2, row[s2]});
      } else {
        std::string next;
        if (!p.next_line(next)) p.fail("expected transition matrix");
        if (next == "uniform") {
          for (auto a : actions)
            for (std::size_t s = 0; s < S; ++s)
              for (std::size_t s2 = 0; s2 < S; ++s2)
                t_entries.push_back({a, s, s2, 1.0 / S});
        } else if (next == "identity") {
          for (auto a : actions)
            for (std::size_t s = 0; s < S; ++s)
              t_entries.push_back({a, s, s, 1.0});
        } else {
          for (std::size_t s = 0; s < S; ++s) {
            auto toks = detail::PomdpParser::tokenize(next);
            if (toks.size() != S) p.fail("bad matrix row");
            for (std::size_t s2 = 0; s2 < S; ++s2)
              for (auto a : actions)
                t_entries.push_back({a, s, s2, p.parse_prob(toks[s2])});
            if (s + 1 < S && !p.next_line(next)) p.fail("truncated matrix");
          }
        }
      }
    } else if (head == "O") {
      if (S == 0 || A == 0 || Z == 0) p.fail("O before header counts");
      std::vector<std::size_t> colons;
      for (std::size_t i = 1; i < tokens.size(); ++i)
        if (tokens[i] == ":") colons.push_back(i);
      auto actions = p.resolve(tokens.size() > 2 ? tokens[2] : "",
                               action_names, A, "action");
      if (colons.size() >= 3) {
        auto rows = p.resolve(tokens[4], state_names, S, "state");
        auto cols = p.resolve(tokens[6], obs_names, Z, "observation");
        double prob = tokens.size() > 7 ? p.parse_prob(tokens[7])
                                        : row_from_stream(1)[0];
        for (auto a : actions)
          for (auto s2 : rows)
            for (auto o : cols) o_entries.push_back({a, s2, o, prob});
      } else if (colons.size() == 2) {
        auto rows = p.resolve(tokens[4], state_names, S, "state");
        auto row = row_from_stream(Z);
        for (auto a : actions)
          for (auto s2 : rows)
            for (std::size_t o = 0; o < Z; ++o)
              o_entries.push_back({a, s2, o, row[o]});
      } else {
        std::string next;
        if (!p.next_line(next)) p.fail("expected observation matrix");
        if (next == "uniform") {
          for (auto a : actions)
            for (std::size_t s2 = 0; s2 < S; ++s2)
              for (std::size_t o = 0; o < Z; ++o)
                o_entries.push_back({a, s2, o, 1.0 / Z});
        } else {
          for (std::size_t s2 = 0; s2 < S; ++s2) {
            auto toks = detail::PomdpParser::tokenize(next);
            if (toks.size() != Z) p.fail("bad matrix row");
            for (std::size_t o = 0; o < Z; ++o)
              for (auto a : actions)
                o_entries.push_back({a, s2, o, p.parse_prob(toks[o])});
            if (s2 + 1 < S && !p.next_line(next)) p.fail("truncated matrix");
          }
        }
      }
    } else if (head == "R") {
      if (S == 0 || A == 0) p.fail("R before header counts");
      // forms: R: a : s : s' : o v   (s', o may be *)
      std::vector<std::size_t> colons;
      for (std::size_t i = 1; i < tokens.size(); ++i)
        if (tokens[i] == ":") colons.push_back(i);
      if (colons.size() != 4 || tokens.size() < 10)
        p.fail("unsupported reward line form");
      auto actions = p.resolve(tokens[2], action_names, A, "action");
      auto states = p.resolve(tokens[4], state_names, S, "state");
      const std::string& sp_tok = tokens[6];
      const std::string& o_tok = tokens[8];
      double v = value_sign * p.parse_prob(tokens[9]);
      // R(s, a, s', o) must not depend on (s', o); anything else cannot be
      // represented as R(s,a)
      bool wild = (sp_tok == "*" && o_tok == "*");
      for (auto a : actions)
        for (auto s : states) {
          auto key = std::make_pair(s, a);
          auto it = rewards.find(key);
          if (it == rewards.end()) {
            rewards[key] = v;
          } else if (std::abs(it->second - v) > 1e-12) {
            p.fail("reward depends on successor state or observation; "
                   "only R(s,a) models are supported");
          }
          (void)wild;
        }
    } else {
      p.fail("unrecognized directive '" + head + "'");
    }
  }

  if (discount < 0.0) throw FormatError("missing discount");
  if (S == 0 || A == 0 || Z == 0)
    throw FormatError("missing states/actions/observations header");

  std::vector<SparseRows::Builder> tb, ob;
  tb.reserve(A);
  ob.reserve(A);
  for (std::size_t a = 0; a < A; ++a) {
    tb.emplace_back(S, S);
    ob.emplace_back(S, Z);
  }
  // later lines overwrite earlier ones for identical coordinates; collect
  // last-writer-wins into dense maps per (a,row)
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, double> t_last,
      o_last;
  for (const auto& e : t_entries) t_last[{e.a, e.row, e.col}] = e.p;
  for (const auto& e : o_entries) o_last[{e.a, e.row, e.col}] = e.p;
  for (const auto& [k, v] : t_last)
    tb[std::get<0>(k)].add(std::get<1>(k), std::get<2>(k), v);
  for (const auto& [k, v] : o_last)
    ob[std::get<0>(k)].add(std::get<1>(k), std::get<2>(k), v);

  std::vector<SparseRows> transition, observation;
  for (std::size_t a = 0; a < A; ++a) {
    transition.push_back(tb[a].finish());
    observation.push_back(ob[a].finish());
  }

  std::vector<double> reward(S * A, 0.0);
  for (const auto& [k, v] : rewards) reward[k.first * A + k.second] = v;

  Belief b0;
  if (start_uniform || (start.empty() && start_state < 0)) {
    b0 = Belief::uniform(S);
  } else if (start_state >= 0) {
    b0 = Belief::point_mass(S, static_cast<std::size_t>(start_state));
  } else {
    b0 = Belief(std::move(start));
  }

  PomdpLabels labels;
  labels.states = std::move(state_names);
  labels.actions = std::move(action_names);
  labels.observations = std::move(obs_names);
  std::size_t horizon = p.horizon_ > 0 ? p.horizon_ : default_horizon;
  return TabularPOMDP(std::move(transition), std::move(observation),
                      std::move(reward), std::move(b0), horizon, discount,
                      std::move(labels));
}

}  // namespace agr
