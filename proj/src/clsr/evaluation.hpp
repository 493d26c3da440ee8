#pragma once

#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace clsr {

struct RetrievalTask {
  std::string query_id;
  std::set<std::string> relevant_ids;
  std::string class_label;
};

/// Labeled classes in file order plus the distractor pool.
struct TaskSet {
  std::vector<std::pair<std::string, std::vector<std::string>>> classes;
  std::vector<std::string> distractors;
};

/// Leave-one-out: every class member becomes a query whose relevant set is
/// the rest of its class.
std::vector<RetrievalTask> derive_tasks(const TaskSet& labeled);

/// (1/|R|) * sum_{r<=k} Prec(r) * [A_r in R], Prec(r) = hits in the first r / r.
/// Rankings shorter than k are accepted (truncation).
double average_precision(const RetrievalTask& task, std::span<const std::string> ranked, std::size_t k);

/// hits in the first k / k.
double precision_at(const RetrievalTask& task, std::span<const std::string> ranked, std::size_t k);

/// Returns the full ranking of the database (best first) for a query id.
using Retriever = std::function<std::vector<std::string>(const std::string& query_id)>;

double map_at_k(std::span<const RetrievalTask> tasks, const Retriever& retriever, std::size_t k);
double precision_at_k(std::span<const RetrievalTask> tasks, const Retriever& retriever, std::size_t k);

struct TaskDetail {
  std::string query_id;
  std::string class_label;
  double average_precision = 0.0;  // full ranking
  std::map<std::size_t, double> precision_at;
};

struct EvalReport {
  std::string retriever;
  double map = 0.0;                          // k = full database
  std::map<std::size_t, double> map_at;      // MAP(k) for each requested k
  std::map<std::size_t, double> max_map_at;  // attainable MAP(k) given |R|
  std::map<std::size_t, double> precision_at;
  std::vector<std::pair<std::string, double>> per_class_map;  // class order of the tasks
  std::vector<TaskDetail> tasks;
};

/// Scores every task once per retriever over a shared database of
/// `database_size` situations.
EvalReport evaluate(const std::string& name, std::span<const RetrievalTask> tasks, const Retriever& retriever,
                    std::size_t database_size, std::span<const std::size_t> ks = std::vector<std::size_t>{1, 3, 5});

std::vector<EvalReport> compare(std::span<const RetrievalTask> tasks,
                                const std::vector<std::pair<std::string, Retriever>>& retrievers,
                                std::size_t database_size,
                                std::span<const std::size_t> ks = std::vector<std::size_t>{1, 3, 5});

/// retriever,metric,k,value rows ("all" as k for the full-ranking MAP).
std::string metrics_csv(std::span<const EvalReport> reports);
/// retriever,class,map rows.
std::string per_class_csv(std::span<const EvalReport> reports);
/// Human-readable MAP / P@k table.
std::string summary_table(std::span<const EvalReport> reports);

}  // namespace clsr
