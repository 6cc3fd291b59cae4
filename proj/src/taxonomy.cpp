#include "atlas/taxonomy.hpp"

#include <fstream>
#include <sstream>

#include "atlas/text.hpp"

namespace atlas {

using nlohmann::json;

std::string_view to_string(TaxonomyKind kind) {
  return kind == TaxonomyKind::kDomain ? "domain" : "skill";
}

TaxonomyKind parse_taxonomy_kind(std::string_view s) {
  if (s == "domain") return TaxonomyKind::kDomain;
  if (s == "skill") return TaxonomyKind::kSkill;
  throw InputError("unknown taxonomy kind '" + std::string(s) +
                   "' (expected domain or skill)");
}

const std::string* TaxonomyNode::annotation(std::string_view key) const {
  auto it = annotations.find(std::string(key));
  return it == annotations.end() ? nullptr : &it->second;
}

std::string TaxonomyPath::key() const {
  std::string out(to_string(kind_));
  out.push_back(':');
  out.append(text::join(node_ids_, "/"));
  return out;
}

namespace {

void validate_node(TaxonomyKind kind, TaxonomyNode& node, int level,
                   std::map<std::string, const TaxonomyNode*, std::less<>>& by_id) {
  if (node.id.empty()) throw TaxonomyError("<empty>", "node id must be non-empty");
  if (text::trim(node.label).empty()) {
    throw TaxonomyError(node.id, "label must be non-empty");
  }
  if (!by_id.emplace(node.id, &node).second) {
    throw TaxonomyError(node.id, "duplicate id");
  }
  node.level = level;
  if (node.annotation(kSocCodeKey) != nullptr &&
      !(kind == TaxonomyKind::kDomain && level == 2)) {
    throw TaxonomyError(node.id,
                        "soc_code annotation is only allowed on occupation "
                        "(level-2) nodes of a domain taxonomy");
  }
  if (node.is_leaf()) {
    if (level != Taxonomy::kLeafDepth) {
      throw TaxonomyError(node.id, "leaf at level " + std::to_string(level) +
                                       ", expected level " +
                                       std::to_string(Taxonomy::kLeafDepth));
    }
    return;
  }
  if (level >= Taxonomy::kLeafDepth) {
    throw TaxonomyError(node.id, "tree deeper than " +
                                     std::to_string(Taxonomy::kLeafDepth) +
                                     " levels below the root");
  }
  for (auto& child : node.children) validate_node(kind, child, level + 1, by_id);
}

void collect_paths(TaxonomyKind kind, const TaxonomyNode& node,
                   std::vector<std::string>& prefix,
                   std::vector<TaxonomyPath>& out) {
  for (const auto& child : node.children) {
    prefix.push_back(child.id);
    if (child.is_leaf()) {
      out.emplace_back(kind, prefix);
    } else {
      collect_paths(kind, child, prefix, out);
    }
    prefix.pop_back();
  }
}

void collect_canonical(const TaxonomyNode& node,
                       std::map<const TaxonomyNode*, std::string>& out) {
  out.emplace(&node, text::canonicalize(node.label));
  for (const auto& child : node.children) collect_canonical(child, out);
}

TaxonomyNode parse_node(const json& j, int level, std::string_view parent_id) {
  const std::string where =
      parent_id.empty() ? std::string("root") : "child of '" + std::string(parent_id) + "'";
  if (!j.is_object()) throw TaxonomyError(where, "node must be an object");
  TaxonomyNode node;
  auto id_it = j.find("id");
  if (id_it == j.end() || !id_it->is_string()) {
    throw TaxonomyError(where, "missing string field 'id'");
  }
  node.id = id_it->get<std::string>();
  auto label_it = j.find("label");
  if (label_it == j.end() || !label_it->is_string()) {
    throw TaxonomyError(node.id, "missing string field 'label'");
  }
  node.label = label_it->get<std::string>();
  node.level = level;
  if (auto lv = j.find("level"); lv != j.end()) {
    if (!lv->is_number_integer() || lv->get<int>() != level) {
      throw TaxonomyError(node.id, "declared level must equal parent level + 1 (" +
                                       std::to_string(level) + ")");
    }
  }
  if (auto ann = j.find("annotations"); ann != j.end() && !ann->is_null()) {
    if (!ann->is_object()) throw TaxonomyError(node.id, "annotations must be an object");
    for (const auto& [k, v] : ann->items()) {
      node.annotations.emplace(k, v.is_string() ? v.get<std::string>() : v.dump());
    }
  }
  auto children = j.find("children");
  if (children != j.end() && !children->is_null()) {
    if (!children->is_array()) throw TaxonomyError(node.id, "children must be an array");
    node.children.reserve(children->size());
    for (const auto& c : *children) node.children.push_back(parse_node(c, level + 1, node.id));
  }
  return node;
}

json node_to_json(const TaxonomyNode& node) {
  json j;
  j["id"] = node.id;
  j["label"] = node.label;
  if (!node.annotations.empty()) j["annotations"] = node.annotations;
  j["children"] = json::array();
  for (const auto& c : node.children) j["children"].push_back(node_to_json(c));
  return j;
}

bool resolve_from(const std::map<const TaxonomyNode*, std::string>& canon,
                  const TaxonomyNode& node, const std::vector<std::string>& wanted,
                  std::size_t depth, std::vector<std::string>& ids, bool& partial) {
  if (depth == wanted.size()) {
    if (node.is_leaf()) return true;
    partial = true;
    return false;
  }
  for (const auto& child : node.children) {
    if (canon.at(&child) != wanted[depth]) continue;
    ids.push_back(child.id);
    if (resolve_from(canon, child, wanted, depth + 1, ids, partial)) return true;
    ids.pop_back();
  }
  return false;
}

void flatten_node(const TaxonomyNode& node, int indent, std::string& out) {
  out.append(static_cast<std::size_t>(indent) * 2, ' ');
  out.append(node.is_leaf() ? "* " : "+ ");
  out.append(node.label);
  out.push_back('\n');
  for (const auto& child : node.children) flatten_node(child, indent + 1, out);
}

}  // namespace

Taxonomy build_taxonomy(TaxonomyKind kind, TaxonomyNode root) {
  auto impl = std::make_shared<Taxonomy::Impl>();
  impl->kind = kind;
  impl->root = std::move(root);
  if (impl->root.children.empty()) {
    throw TaxonomyError(impl->root.id.empty() ? "<root>" : impl->root.id,
                        "taxonomy must have at least one leaf below the root");
  }
  if (impl->root.annotation(kSocCodeKey) != nullptr) {
    throw TaxonomyError(impl->root.id, "soc_code annotation not allowed on root");
  }
  if (impl->root.id.empty()) throw TaxonomyError("<empty>", "node id must be non-empty");
  impl->root.level = 0;
  impl->by_id.emplace(impl->root.id, &impl->root);
  for (auto& child : impl->root.children) validate_node(kind, child, 1, impl->by_id);

  std::vector<std::string> prefix;
  collect_paths(kind, impl->root, prefix, impl->paths);
  for (std::size_t i = 0; i < impl->paths.size(); ++i) {
    impl->path_by_leaf.emplace(impl->paths[i].leaf_id(), i);
  }
  collect_canonical(impl->root, impl->canonical_label);
  return Taxonomy(std::move(impl));
}

std::optional<std::size_t> Taxonomy::index_of(const TaxonomyPath& path) const {
  if (path.kind() != kind() || path.node_ids().empty()) return std::nullopt;
  auto it = impl_->path_by_leaf.find(path.leaf_id());
  if (it == impl_->path_by_leaf.end()) return std::nullopt;
  if (impl_->paths[it->second] != path) return std::nullopt;
  return it->second;
}

const TaxonomyNode* Taxonomy::find(std::string_view id) const {
  auto it = impl_->by_id.find(id);
  return it == impl_->by_id.end() ? nullptr : it->second;
}

const TaxonomyNode& Taxonomy::node(std::string_view id) const {
  const TaxonomyNode* n = find(id);
  if (n == nullptr) {
    throw InputError("unknown " + std::string(to_string(kind())) +
                     " taxonomy node '" + std::string(id) + "'");
  }
  return *n;
}

std::vector<const TaxonomyNode*> Taxonomy::nodes_at_level(int level) const {
  std::vector<const TaxonomyNode*> out;
  std::vector<const TaxonomyNode*> stack{&impl_->root};
  // Preorder walk keeps document order.
  while (!stack.empty()) {
    const TaxonomyNode* n = stack.back();
    stack.pop_back();
    if (n->level == level) {
      out.push_back(n);
      continue;
    }
    for (auto it = n->children.rbegin(); it != n->children.rend(); ++it) {
      stack.push_back(&*it);
    }
  }
  return out;
}

std::vector<std::string> Taxonomy::labels(const TaxonomyPath& path) const {
  std::vector<std::string> out;
  out.reserve(path.length());
  for (const auto& id : path.node_ids()) out.push_back(node(id).label);
  return out;
}

TaxonomyPath Taxonomy::resolve(std::span<const std::string> labels) const {
  std::vector<std::string> wanted;
  wanted.reserve(labels.size());
  for (const auto& l : labels) wanted.push_back(text::canonicalize(l));
  const std::string shown = "[" + text::join({labels.begin(), labels.end()}, " > ") + "]";
  if (wanted.empty()) {
    throw ResolveError(ResolveError::Kind::kNoMatch, "empty label sequence");
  }
  std::vector<std::string> ids;
  bool partial = false;
  if (resolve_from(impl_->canonical_label, impl_->root, wanted, 0, ids, partial)) {
    return TaxonomyPath(kind(), std::move(ids));
  }
  if (partial) {
    throw ResolveError(ResolveError::Kind::kPartialMatch,
                       shown + " ends at a non-leaf " + std::string(to_string(kind())) +
                           " node");
  }
  throw ResolveError(ResolveError::Kind::kNoMatch,
                     shown + " does not match any " + std::string(to_string(kind())) +
                         " taxonomy path");
}

std::string Taxonomy::flatten_for_prompt() const {
  std::string out = "# " + std::string(to_string(kind())) +
                    " taxonomy; '+' marks a category, '*' marks a leaf; "
                    "indentation encodes nesting\n";
  for (const auto& child : impl_->root.children) flatten_node(child, 0, out);
  return out;
}

Taxonomy load_taxonomy(const json& doc) {
  if (!doc.is_object()) throw InputError("taxonomy document must be a JSON object");
  auto kind_it = doc.find("kind");
  if (kind_it == doc.end() || !kind_it->is_string()) {
    throw InputError("taxonomy document requires a string 'kind'");
  }
  const TaxonomyKind kind = parse_taxonomy_kind(kind_it->get<std::string>());
  auto root_it = doc.find("root");
  if (root_it == doc.end()) throw InputError("taxonomy document requires 'root'");
  return build_taxonomy(kind, parse_node(*root_it, 0, {}));
}

Taxonomy load_taxonomy_string(std::string_view content) {
  json doc;
  try {
    doc = json::parse(content);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("malformed taxonomy document: ") + e.what());
  }
  return load_taxonomy(doc);
}

Taxonomy load_taxonomy_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open taxonomy " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return load_taxonomy_string(ss.str());
  } catch (const TaxonomyError&) {
    throw;
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

json taxonomy_to_json(const Taxonomy& t) {
  return json{{"kind", std::string(to_string(t.kind()))}, {"root", node_to_json(t.root())}};
}

std::vector<TaxonomyPath> all_paths(const Taxonomy& t) { return t.paths(); }

TaxonomyPath resolve_path(const Taxonomy& t, std::span<const std::string> labels) {
  return t.resolve(labels);
}

std::string flatten_for_prompt(const Taxonomy& t) { return t.flatten_for_prompt(); }

}  // namespace atlas
