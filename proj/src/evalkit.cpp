#include "pairforge/evalkit.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace pairforge {

namespace {

void check_group_size(std::size_t n, const std::string& prompt_id, const EvalOptions& options) {
  if (n == 0) fail(ErrorKind::EmptyInput, "prompt '" + prompt_id + "' has no generated images");
  if (!options.allow_partial && n != options.images_per_prompt) {
    fail(ErrorKind::PromptGroupSizeMismatch,
         "prompt '" + prompt_id + "' has " + std::to_string(n) + " images, expected " +
             std::to_string(options.images_per_prompt));
  }
}

}  // namespace

ConceptEval eval_concept(std::string concept_id, std::span<const EvalPromptGroup> groups,
                         const ConceptRefSet& refs, const EvalOptions& options) {
  if (groups.empty()) fail(ErrorKind::EmptyInput, "no prompt groups to evaluate");
  double sum_i = 0.0, sum_t = 0.0;
  for (const auto& g : groups) {
    check_group_size(g.images.size(), g.prompt.prompt_id, options);
    double pi = 0.0, pt = 0.0;
    for (const auto& img : g.images) {
      pi += image_similarity(img, refs);
      pt += text_similarity(img, g.prompt);
    }
    sum_i += pi / static_cast<double>(g.images.size());
    sum_t += pt / static_cast<double>(g.images.size());
  }
  const auto n = static_cast<double>(groups.size());
  return {std::move(concept_id), sum_i / n, sum_t / n, groups.size()};
}

ConceptEval eval_concept_scores(std::string concept_id, std::span<const ScoredGroup> groups,
                                const EvalOptions& options) {
  if (groups.empty()) fail(ErrorKind::EmptyInput, "no prompt groups to evaluate");
  double sum_i = 0.0, sum_t = 0.0;
  for (const auto& g : groups) {
    check_group_size(g.samples.size(), g.prompt_id, options);
    double pi = 0.0, pt = 0.0;
    for (const auto& s : g.samples) {
      pi += s.is;
      pt += s.ts;
    }
    sum_i += pi / static_cast<double>(g.samples.size());
    sum_t += pt / static_cast<double>(g.samples.size());
  }
  const auto n = static_cast<double>(groups.size());
  return {std::move(concept_id), sum_i / n, sum_t / n, groups.size()};
}

OverallStats aggregate(std::span<const ConceptEval> per_concept) {
  if (per_concept.empty()) fail(ErrorKind::EmptyInput, "no concepts to aggregate");
  std::vector<const ConceptEval*> sorted;
  for (const auto& c : per_concept) sorted.push_back(&c);
  std::stable_sort(sorted.begin(), sorted.end(), [](const ConceptEval* a, const ConceptEval* b) {
    return a->concept_id < b->concept_id;
  });
  const auto n = static_cast<double>(sorted.size());
  OverallStats o;
  o.n_concepts = sorted.size();
  for (const auto* c : sorted) {
    o.mean_i += c->mean_clip_i;
    o.mean_t += c->mean_clip_t;
  }
  o.mean_i /= n;
  o.mean_t /= n;
  double vi = 0.0, vt = 0.0;
  for (const auto* c : sorted) {
    vi += (c->mean_clip_i - o.mean_i) * (c->mean_clip_i - o.mean_i);
    vt += (c->mean_clip_t - o.mean_t) * (c->mean_clip_t - o.mean_t);
  }
  o.sigma_i = std::sqrt(vi / n);
  o.sigma_t = std::sqrt(vt / n);
  return o;
}

std::string_view to_string(PromptSubset s) { return s == PromptSubset::live ? "live" : "object"; }

PromptSubset subset_for_class(const std::string& concept_class,
                              const std::set<std::string>& live_classes) {
  return live_classes.count(concept_class) ? PromptSubset::live : PromptSubset::object;
}

json EvalReport::to_json() const {
  json concepts = json::object();
  for (const auto& c : per_concept) {
    concepts[c.concept_id] = {{"mean_clip_i", c.mean_clip_i},
                              {"mean_clip_t", c.mean_clip_t},
                              {"n_prompts", c.n_prompts}};
  }
  return {{"per_concept", concepts},
          {"overall",
           {{"mean_i", overall.mean_i},
            {"sigma_i", overall.sigma_i},
            {"mean_t", overall.mean_t},
            {"sigma_t", overall.sigma_t},
            {"n_concepts", overall.n_concepts}}},
          {"prompt_subset", prompt_subset},
          {"n_images_per_prompt", n_images_per_prompt}};
}

std::vector<TrajectoryPoint> pareto_frontier(std::span<const TrajectoryPoint> points) {
  std::vector<const TrajectoryPoint*> order;
  for (const auto& p : points) order.push_back(&p);
  // Sweep by ts descending; within equal ts, larger is first.
  std::stable_sort(order.begin(), order.end(), [](const TrajectoryPoint* a, const TrajectoryPoint* b) {
    if (a->ts != b->ts) return a->ts > b->ts;
    return a->is > b->is;
  });
  std::vector<TrajectoryPoint> front;
  double best_is_strictly_right = -std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && order[j]->ts == order[i]->ts) ++j;
    const double top = order[i]->is;  // max is within this ts block
    for (std::size_t k = i; k < j; ++k) {
      const double is = order[k]->is;
      // Dominated by a same-ts point with larger is, or by any point to the
      // right with is >= this one.
      if (is < top || best_is_strictly_right >= is) continue;
      front.push_back(*order[k]);
    }
    best_is_strictly_right = std::max(best_is_strictly_right, top);
    i = j;
  }
  std::stable_sort(front.begin(), front.end(), [](const TrajectoryPoint& a, const TrajectoryPoint& b) {
    if (a.ts != b.ts) return a.ts < b.ts;
    return a.is < b.is;
  });
  return front;
}

std::string trajectory_csv(std::span<const TrajectoryPoint> points) {
  std::string out = "label,ts,is\n";
  char buf[64];
  for (const auto& p : points) {
    out += p.label;
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g\n", p.ts, p.is);
    out += buf;
  }
  return out;
}

std::vector<TrajectoryPoint> read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open '" + path.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  std::vector<TrajectoryPoint> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "label,ts,is") fail_at_line(path, line_no, "expected header 'label,ts,is'");
      continue;
    }
    const auto c2 = line.rfind(',');
    const auto c1 = c2 == std::string::npos ? c2 : line.rfind(',', c2 - 1);
    if (c1 == std::string::npos) fail_at_line(path, line_no, "expected 3 columns");
    TrajectoryPoint p;
    p.label = line.substr(0, c1);
    try {
      std::size_t used = 0;
      const auto ts_s = line.substr(c1 + 1, c2 - c1 - 1);
      const auto is_s = line.substr(c2 + 1);
      p.ts = std::stod(ts_s, &used);
      if (used != ts_s.size()) throw std::invalid_argument("ts");
      p.is = std::stod(is_s, &used);
      if (used != is_s.size()) throw std::invalid_argument("is");
    } catch (const std::exception&) {
      fail_at_line(path, line_no, "non-numeric ts/is");
    }
    if (!std::isfinite(p.ts) || !std::isfinite(p.is)) fail_at_line(path, line_no, "non-finite value");
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string trajectory_svg(std::span<const TrajectoryPoint> points, const std::string& title) {
  constexpr double W = 480, H = 360, M = 48;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (!points.empty()) {
    x0 = x1 = points.front().ts;
    y0 = y1 = points.front().is;
    for (const auto& p : points) {
      x0 = std::min(x0, p.ts);
      x1 = std::max(x1, p.ts);
      y0 = std::min(y0, p.is);
      y1 = std::max(y1, p.is);
    }
  }
  const double padx = std::max((x1 - x0) * 0.1, 1e-3), pady = std::max((y1 - y0) * 0.1, 1e-3);
  x0 -= padx, x1 += padx, y0 -= pady, y1 += pady;
  auto sx = [&](double v) { return M + (v - x0) / (x1 - x0) * (W - 2 * M); };
  auto sy = [&](double v) { return H - M - (v - y0) / (y1 - y0) * (H - 2 * M); };

  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) {
    os << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
       << xml_escape(title) << "</text>\n";
  }
  os << "<line x1=\"" << M << "\" y1=\"" << H - M << "\" x2=\"" << W - M << "\" y2=\"" << H - M
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << M << "\" y1=\"" << M << "\" x2=\"" << M << "\" y2=\"" << H - M
     << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">TS</text>\n";
  os << "<text x=\"14\" y=\"" << H / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
     << H / 2 << ")\">IS</text>\n";
  const auto front = pareto_frontier(points);
  if (front.size() > 1) {
    os << "<polyline fill=\"none\" stroke=\"#999\" stroke-dasharray=\"4 3\" points=\"";
    for (const auto& p : front) os << sx(p.ts) << ',' << sy(p.is) << ' ';
    os << "\"/>\n";
  }
  if (points.size() > 1) {
    os << "<polyline fill=\"none\" stroke=\"#1f77b4\" points=\"";
    for (const auto& p : points) os << sx(p.ts) << ',' << sy(p.is) << ' ';
    os << "\"/>\n";
  }
  for (const auto& p : points) {
    os << "<circle cx=\"" << sx(p.ts) << "\" cy=\"" << sy(p.is)
       << "\" r=\"4\" fill=\"#1f77b4\"><title>" << xml_escape(p.label) << "</title></circle>\n";
  }
  os << "</svg>\n";
  return os.str();
}

double VoteTally::win_pct() const { return total() ? 100.0 * static_cast<double>(win) / static_cast<double>(total()) : 0.0; }
double VoteTally::lose_pct() const { return total() ? 100.0 * static_cast<double>(lose) / static_cast<double>(total()) : 0.0; }
double VoteTally::no_diff_pct() const { return total() ? 100.0 * static_cast<double>(no_diff) / static_cast<double>(total()) : 0.0; }

namespace {

std::string lowercase(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t");
    const auto e = cell.find_last_not_of(" \t");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::vector<VoteTally> tabulate_votes(std::istream& csv) {
  std::string line;
  std::size_t line_no = 0;
  std::ptrdiff_t col_method = -1, col_question = -1, col_vote = -1;
  std::size_t n_cols = 0;
  std::map<std::pair<std::string, std::string>, VoteTally> cells;
  while (std::getline(csv, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cols = split_csv(line);
    if (col_vote < 0) {
      n_cols = cols.size();
      for (std::size_t i = 0; i < cols.size(); ++i) {
        if (cols[i] == "method") col_method = static_cast<std::ptrdiff_t>(i);
        if (cols[i] == "question") col_question = static_cast<std::ptrdiff_t>(i);
        if (cols[i] == "vote") col_vote = static_cast<std::ptrdiff_t>(i);
      }
      if (col_method < 0 || col_question < 0 || col_vote < 0) {
        fail(ErrorKind::ParseError, "vote CSV header must contain method, question and vote");
      }
      continue;
    }
    if (cols.size() != n_cols) {
      fail(ErrorKind::ParseError, "vote CSV line " + std::to_string(line_no) + ": expected " +
                                      std::to_string(n_cols) + " columns");
    }
    const auto& method = cols[static_cast<std::size_t>(col_method)];
    const auto& question = cols[static_cast<std::size_t>(col_question)];
    const auto vote = lowercase(cols[static_cast<std::size_t>(col_vote)]);
    auto& t = cells[{method, question}];
    t.method = method;
    t.question = question;
    if (vote == "win") {
      ++t.win;
    } else if (vote == "lose") {
      ++t.lose;
    } else if (vote == "no_diff" || vote == "nodiff" || vote == "no diff") {
      ++t.no_diff;
    } else {
      fail(ErrorKind::ParseError, "vote CSV line " + std::to_string(line_no) + ": unknown vote '" +
                                      cols[static_cast<std::size_t>(col_vote)] + "'");
    }
  }
  if (col_vote < 0) fail(ErrorKind::EmptyInput, "vote CSV is empty");
  std::vector<VoteTally> out;
  for (auto& [key, t] : cells) out.push_back(t);
  return out;
}

json votes_to_json(const std::vector<VoteTally>& tallies) {
  json rows = json::array();
  for (const auto& t : tallies) {
    rows.push_back({{"method", t.method},
                    {"question", t.question},
                    {"votes", t.total()},
                    {"win_pct", t.win_pct()},
                    {"lose_pct", t.lose_pct()},
                    {"no_diff_pct", t.no_diff_pct()},
                    {"win", format_pct(t.win_pct())},
                    {"lose", format_pct(t.lose_pct())},
                    {"no_diff", format_pct(t.no_diff_pct())}});
  }
  return {{"basis", "all_votes"}, {"rows", rows}};
}

std::string format_pct(double pct) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", pct);
  return buf;
}

}  // namespace pairforge
