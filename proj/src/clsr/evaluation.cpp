#include "clsr/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <unordered_set>

#include "clsr/error.hpp"

namespace clsr {

namespace {

void check_unique(std::span<const std::string> ranked) {
  std::unordered_set<std::string> seen;
  for (const auto& id : ranked)
    require(seen.insert(id).second, ErrorKind::Input, "ranking lists id '" + id + "' more than once");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::vector<RetrievalTask> derive_tasks(const TaskSet& labeled) {
  std::vector<RetrievalTask> tasks;
  for (const auto& [label, members] : labeled.classes) {
    require(members.size() >= 2, ErrorKind::Config,
            "class '" + label + "' has " + std::to_string(members.size()) + " member(s); leave-one-out needs 2");
    for (const auto& query : members) {
      RetrievalTask task{query, {}, label};
      for (const auto& other : members)
        if (other != query) task.relevant_ids.insert(other);
      require(!task.relevant_ids.empty(), ErrorKind::Config, "class '" + label + "' repeats one id");
      tasks.push_back(std::move(task));
    }
  }
  return tasks;
}

double average_precision(const RetrievalTask& task, std::span<const std::string> ranked, std::size_t k) {
  require(!task.relevant_ids.empty(), ErrorKind::Input, "task '" + task.query_id + "' has no relevant ids");
  check_unique(ranked);
  const std::size_t n = std::min(k, ranked.size());
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    if (task.relevant_ids.count(ranked[r])) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  return sum / static_cast<double>(task.relevant_ids.size());
}

double precision_at(const RetrievalTask& task, std::span<const std::string> ranked, std::size_t k) {
  require(k >= 1, ErrorKind::Input, "precision@k needs k >= 1");
  check_unique(ranked);
  const std::size_t n = std::min(k, ranked.size());
  std::size_t hits = 0;
  for (std::size_t r = 0; r < n; ++r) hits += task.relevant_ids.count(ranked[r]);
  return static_cast<double>(hits) / static_cast<double>(k);
}

double map_at_k(std::span<const RetrievalTask> tasks, const Retriever& retriever, std::size_t k) {
  require(!tasks.empty(), ErrorKind::Input, "MAP over an empty task list");
  double sum = 0.0;
  for (const auto& t : tasks) sum += average_precision(t, retriever(t.query_id), k);
  return sum / static_cast<double>(tasks.size());
}

double precision_at_k(std::span<const RetrievalTask> tasks, const Retriever& retriever, std::size_t k) {
  require(!tasks.empty(), ErrorKind::Input, "precision over an empty task list");
  double sum = 0.0;
  for (const auto& t : tasks) sum += precision_at(t, retriever(t.query_id), k);
  return sum / static_cast<double>(tasks.size());
}

EvalReport evaluate(const std::string& name, std::span<const RetrievalTask> tasks, const Retriever& retriever,
                    std::size_t database_size, std::span<const std::size_t> ks) {
  require(!tasks.empty(), ErrorKind::Input, "evaluation needs at least one task");
  EvalReport report;
  report.retriever = name;
  std::vector<std::string> class_order;
  std::map<std::string, std::pair<double, std::size_t>> per_class;
  const double n = static_cast<double>(tasks.size());

  for (const auto& task : tasks) {
    const auto ranked = retriever(task.query_id);
    TaskDetail detail{task.query_id, task.class_label, average_precision(task, ranked, database_size), {}};
    report.map += detail.average_precision / n;
    for (auto k : ks) {
      detail.precision_at[k] = precision_at(task, ranked, k);
      report.precision_at[k] += detail.precision_at[k] / n;
      report.map_at[k] += average_precision(task, ranked, k) / n;
      report.max_map_at[k] += static_cast<double>(std::min(k, task.relevant_ids.size())) /
                              static_cast<double>(task.relevant_ids.size()) / n;
    }
    if (!per_class.count(task.class_label)) class_order.push_back(task.class_label);
    auto& acc = per_class[task.class_label];
    acc.first += detail.average_precision;
    acc.second += 1;
    report.tasks.push_back(std::move(detail));
  }
  for (const auto& label : class_order) {
    const auto& acc = per_class[label];
    report.per_class_map.emplace_back(label, acc.first / static_cast<double>(acc.second));
  }
  return report;
}

std::vector<EvalReport> compare(std::span<const RetrievalTask> tasks,
                                const std::vector<std::pair<std::string, Retriever>>& retrievers,
                                std::size_t database_size, std::span<const std::size_t> ks) {
  std::vector<EvalReport> out;
  for (const auto& [name, retriever] : retrievers) out.push_back(evaluate(name, tasks, retriever, database_size, ks));
  return out;
}

std::string metrics_csv(std::span<const EvalReport> reports) {
  std::ostringstream os;
  os << "retriever,metric,k,value\n";
  for (const auto& r : reports) {
    os << r.retriever << ",map,all," << fmt(r.map) << '\n';
    for (const auto& [k, v] : r.map_at) os << r.retriever << ",map," << k << ',' << fmt(v) << '\n';
    for (const auto& [k, v] : r.max_map_at) os << r.retriever << ",max_map," << k << ',' << fmt(v) << '\n';
    for (const auto& [k, v] : r.precision_at) os << r.retriever << ",precision," << k << ',' << fmt(v) << '\n';
  }
  return os.str();
}

std::string per_class_csv(std::span<const EvalReport> reports) {
  std::ostringstream os;
  os << "retriever,class,map\n";
  for (const auto& r : reports)
    for (const auto& [label, v] : r.per_class_map) os << r.retriever << ',' << label << ',' << fmt(v) << '\n';
  return os.str();
}

std::string summary_table(std::span<const EvalReport> reports) {
  std::ostringstream os;
  std::size_t width = 9;
  for (const auto& r : reports) width = std::max(width, r.retriever.size());
  char line[256];
  std::snprintf(line, sizeof(line), "%-*s  %6s", static_cast<int>(width), "retriever", "MAP");
  os << line;
  if (!reports.empty())
    for (const auto& [k, v] : reports.front().precision_at) {
      std::snprintf(line, sizeof(line), "  %6s", ("@" + std::to_string(k)).c_str());
      os << line;
    }
  os << '\n';
  for (const auto& r : reports) {
    std::snprintf(line, sizeof(line), "%-*s  %6.3f", static_cast<int>(width), r.retriever.c_str(), r.map);
    os << line;
    for (const auto& [k, v] : r.precision_at) {
      std::snprintf(line, sizeof(line), "  %6.3f", v);
      os << line;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace clsr
