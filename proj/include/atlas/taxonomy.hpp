#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "atlas/error.hpp"

namespace atlas {

enum class TaxonomyKind { kDomain, kSkill };

std::string_view to_string(TaxonomyKind kind);
// Accepts "domain" / "skill"; throws InputError otherwise.
TaxonomyKind parse_taxonomy_kind(std::string_view s);

// Annotation keys with meaning to the toolkit.
inline constexpr std::string_view kSocCodeKey = "soc_code";
inline constexpr std::string_view kActivityIdKey = "activity_id";

struct TaxonomyNode {
  std::string id;
  std::string label;
  int level = 0;
  std::vector<TaxonomyNode> children;
  std::map<std::string, std::string> annotations;

  bool is_leaf() const { return children.empty(); }
  const std::string* annotation(std::string_view key) const;
};

// A root-to-leaf path, stored as node ids from the root's child down to the
// leaf (the root itself is implicit).
class TaxonomyPath {
 public:
  TaxonomyPath(TaxonomyKind kind, std::vector<std::string> node_ids)
      : kind_(kind), node_ids_(std::move(node_ids)) {}

  TaxonomyKind kind() const { return kind_; }
  const std::vector<std::string>& node_ids() const { return node_ids_; }
  const std::string& leaf_id() const { return node_ids_.back(); }
  std::size_t length() const { return node_ids_.size(); }

  // Id at 1-based depth below the root.
  const std::string& id_at_depth(int depth) const {
    return node_ids_.at(static_cast<std::size_t>(depth - 1));
  }

  // "kind:id/id/id"; unique per path.
  std::string key() const;

  friend bool operator==(const TaxonomyPath&, const TaxonomyPath&) = default;
  friend auto operator<=>(const TaxonomyPath&, const TaxonomyPath&) = default;

 private:
  TaxonomyKind kind_;
  std::vector<std::string> node_ids_;
};

// Raised for structural problems in a taxonomy document.
class TaxonomyError : public InputError {
 public:
  TaxonomyError(std::string node_id, std::string reason)
      : InputError("taxonomy node '" + node_id + "': " + reason),
        node_id_(std::move(node_id)),
        reason_(std::move(reason)) {}
  const std::string& node_id() const { return node_id_; }
  const std::string& reason() const { return reason_; }

 private:
  std::string node_id_;
  std::string reason_;
};

// Raised when a label sequence cannot be resolved to a root-to-leaf path.
class ResolveError : public InputError {
 public:
  enum class Kind { kNoMatch, kPartialMatch };
  ResolveError(Kind kind, const std::string& what)
      : InputError(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Immutable, validated tree. Copies share the same underlying nodes, so a
// Taxonomy can be handed to any number of readers.
class Taxonomy {
 public:
  // Every leaf sits exactly this many levels below the root, for both kinds.
  static constexpr int kLeafDepth = 3;

  TaxonomyKind kind() const { return impl_->kind; }
  const TaxonomyNode& root() const { return impl_->root; }

  // All root-to-leaf paths in document order.
  const std::vector<TaxonomyPath>& paths() const { return impl_->paths; }
  std::size_t path_count() const { return impl_->paths.size(); }

  // Dense index of `path` within paths(), or nullopt if it is not a path of
  // this taxonomy.
  std::optional<std::size_t> index_of(const TaxonomyPath& path) const;
  bool contains(const TaxonomyPath& path) const { return index_of(path).has_value(); }

  const TaxonomyNode* find(std::string_view id) const;
  const TaxonomyNode& node(std::string_view id) const;

  // Nodes at the given level in document order.
  std::vector<const TaxonomyNode*> nodes_at_level(int level) const;

  std::vector<std::string> labels(const TaxonomyPath& path) const;

  TaxonomyPath resolve(std::span<const std::string> labels) const;

  std::string flatten_for_prompt() const;

 private:
  struct Impl {
    TaxonomyKind kind;
    TaxonomyNode root;
    std::vector<TaxonomyPath> paths;
    std::map<std::string, const TaxonomyNode*, std::less<>> by_id;
    std::map<std::string, std::size_t, std::less<>> path_by_leaf;
    std::map<const TaxonomyNode*, std::string> canonical_label;
  };

  explicit Taxonomy(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  friend Taxonomy build_taxonomy(TaxonomyKind kind, TaxonomyNode root);

  std::shared_ptr<const Impl> impl_;
};

// Validates `root` (levels are recomputed from the tree shape) and builds the
// path index. Throws TaxonomyError on any structural violation.
Taxonomy build_taxonomy(TaxonomyKind kind, TaxonomyNode root);

// Document: {"kind": "domain"|"skill", "root": {id, label, annotations?, children}}.
Taxonomy load_taxonomy(const nlohmann::json& doc);
Taxonomy load_taxonomy_string(std::string_view content);
Taxonomy load_taxonomy_file(const std::filesystem::path& path);

nlohmann::json taxonomy_to_json(const Taxonomy& t);

std::vector<TaxonomyPath> all_paths(const Taxonomy& t);
TaxonomyPath resolve_path(const Taxonomy& t, std::span<const std::string> labels);
std::string flatten_for_prompt(const Taxonomy& t);

}  // namespace atlas

template <>
struct std::hash<atlas::TaxonomyPath> {
  std::size_t operator()(const atlas::TaxonomyPath& p) const noexcept {
    return std::hash<std::string>{}(p.key());
  }
};
