#include "flexnet/model_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "flexnet/errors.hpp"

namespace flexnet {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      throw ModelError("unknown key \"" + item.key() + "\" in " + where);
    }
  }
}

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ModelError(std::string("missing key \"") + key + "\" in " + where);
  return *it;
}

std::string as_id(const json& v, const std::string& where) {
  if (!v.is_string()) throw ModelError("expected string id in " + where);
  return v.get<std::string>();
}

// Reads [{"id": .., "rate": ..}, ...].
void read_nodes(const json& arr, const char* kind, std::vector<std::string>& ids,
                std::vector<double>& rates) {
  if (!arr.is_array()) throw ModelError(std::string("\"") + kind + "\" must be an array");
  for (const auto& node : arr) {
    if (!node.is_object()) throw ModelError(std::string(kind) + " entries must be objects");
    reject_unknown_keys(node, {"id", "rate"}, std::string(kind) + " entry");
    ids.push_back(as_id(require(node, "id", kind), kind));
    const json& rate = require(node, "rate", std::string(kind) + " " + ids.back());
    if (!rate.is_number()) throw ModelError("rate of " + ids.back() + " is not a number");
    rates.push_back(rate.get<double>());
  }
}

}  // namespace

NetworkModel model_from_json(const json& doc) {
  if (!doc.is_object()) throw ModelError("network document must be a JSON object");
  reject_unknown_keys(doc, {"dispatchers", "servers", "edges", "partition"}, "network");

  std::vector<std::string> dispatchers;
  std::vector<std::string> servers;
  RateSpec rates;
  read_nodes(require(doc, "dispatchers", "network"), "dispatchers", dispatchers, rates.lambda);
  read_nodes(require(doc, "servers", "network"), "servers", servers, rates.mu);

  const json& edge_arr = require(doc, "edges", "network");
  if (!edge_arr.is_array()) throw ModelError("\"edges\" must be an array");
  std::vector<Edge> edges;
  for (const auto& e : edge_arr) {
    if (!e.is_array() || e.size() != 2) throw ModelError("each edge must be [dispatcherId, serverId]");
    edges.emplace_back(as_id(e[0], "edge"), as_id(e[1], "edge"));
  }

  BipartiteGraph graph(std::move(dispatchers), std::move(servers), edges);

  std::optional<DeparturePartition> partition;
  if (auto it = doc.find("partition"); it != doc.end()) {
    if (!it->is_array()) throw ModelError("\"partition\" must be an array of arrays");
    DeparturePartition p;
    for (const auto& block : *it) {
      if (!block.is_array()) throw ModelError("partition blocks must be arrays");
      std::vector<std::size_t> members;
      for (const auto& id : block) members.push_back(graph.server_index(as_id(id, "partition")));
      p.blocks.push_back(std::move(members));
    }
    partition = std::move(p);
  }
  return NetworkModel(std::move(graph), std::move(rates), std::move(partition));
}

json model_to_json(const NetworkModel& model) {
  const auto& g = model.graph();
  json doc;
  doc["dispatchers"] = json::array();
  for (std::size_t d = 0; d < g.num_dispatchers(); ++d) {
    doc["dispatchers"].push_back({{"id", g.dispatcher_id(d)}, {"rate", model.lambda(d)}});
  }
  doc["servers"] = json::array();
  for (std::size_t u = 0; u < g.num_servers(); ++u) {
    doc["servers"].push_back({{"id", g.server_id(u)}, {"rate", model.mu(u)}});
  }
  doc["edges"] = json::array();
  for (const auto& [d, u] : g.edges()) doc["edges"].push_back({d, u});
  doc["partition"] = json::array();
  for (const auto& block : model.partition().blocks) {
    json ids = json::array();
    for (std::size_t u : block) ids.push_back(g.server_id(u));
    doc["partition"].push_back(std::move(ids));
  }
  return doc;
}

NetworkModel parse_model(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ModelError(std::string("parse error: ") + e.what());
  }
  return model_from_json(doc);
}

NetworkModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

void save_model(const NetworkModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ModelError("cannot write " + path.string());
  out << model_to_json(model).dump(2) << '\n';
}

}  // namespace flexnet
