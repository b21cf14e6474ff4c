#include "tinysched/features.hpp"

#include <nlohmann/json.hpp>

namespace tinysched::features {

using nlohmann::json;

Eigen::VectorXd encode_computation(const ir::Program& p, const ir::Computation& comp,
                                   const transforms::CompTags& tags) {
  if (comp.depth() > kMaxLoops)
    throw TooDeep("computation " + std::to_string(comp.id) + " exceeds 7 loop levels");
  const std::vector<const ir::AccessMatrix*> reads = ir::loads_of(comp.rhs);
  if (static_cast<int>(reads.size()) > kAccessSlots)
    throw TooManyAccesses("computation " + std::to_string(comp.id) + " exceeds 21 reads");

  Eigen::VectorXd v = Eigen::VectorXd::Zero(kWidth);

  for (int l = 0; l < comp.depth(); ++l) {
    const ir::Loop& loop = comp.loops[l];
    const transforms::LoopTags& lt = tags.levels[l];
    const int base = l * kLoopFields;
    v[base + 0] = signed_log(static_cast<double>(loop.upper));
    v[base + 1] = signed_log(static_cast<double>(loop.lower));
    v[base + 2] = loop.is_reduction_dim ? 1.0 : 0.0;
    v[base + 3] = lt.fusion ? 1.0 : 0.0;
    v[base + 4] = lt.interchange ? 1.0 : 0.0;
    v[base + 5] = lt.tiling ? 1.0 : 0.0;
    v[base + 6] = signed_log(static_cast<double>(lt.tile_factor));
  }

  const int extras = kMaxLoops * kLoopFields;
  v[extras + 0] = tags.unrolled ? 1.0 : 0.0;
  v[extras + 1] = signed_log(static_cast<double>(tags.unroll_factor));
  v[extras + 2] =
      tags.parallel_level >= 0 ? signed_log(static_cast<double>(tags.parallel_level + 1)) : 0.0;
  v[extras + 3] = 0.0;  // vectorize slot, reserved

  const int access_base = extras + kInnerExtras;
  for (std::size_t a = 0; a < reads.size(); ++a) {
    const ir::AccessMatrix& m = *reads[a];
    if (m.rank() > kAccessRows)
      throw RankTooLarge("read of buffer " + std::to_string(m.buffer_id) + " has rank > 5");
    const int base = access_base + static_cast<int>(a) * kAccessFields;
    const int depth = m.depth();
    for (int r = 0; r < m.rank(); ++r) {
      for (int q = 0; q < depth; ++q)
        v[base + r * kAccessCols + q] = signed_log(m.coeffs(r, q));
      v[base + r * kAccessCols + (kAccessCols - 1)] = signed_log(m.coeffs(r, depth));
    }
    v[base + kAccessRows * kAccessCols] = signed_log(static_cast<double>(m.buffer_id));
  }

  const ir::Buffer* out = p.find_buffer(comp.lhs.buffer_id);
  if (!out || out->rank() > ir::kMaxRank)
    throw RankTooLarge("lhs buffer of computation " + std::to_string(comp.id));
  const int lhs_base = access_base + kAccessSlots * kAccessFields;
  v[lhs_base] = signed_log(static_cast<double>(out->rank()));
  for (int r = 0; r < out->rank(); ++r)
    v[lhs_base + 1 + r] = signed_log(static_cast<double>(out->dim_sizes[r]));

  int adds = 0, muls = 0, subs = 0, divs = 0;
  ir::count_ops(comp.rhs, adds, muls, subs, divs);
  const int op_base = lhs_base + kLhsFields;
  v[op_base + 0] = signed_log(adds);
  v[op_base + 1] = signed_log(muls);
  v[op_base + 2] = signed_log(subs);
  v[op_base + 3] = signed_log(divs);
  return v;
}

ProgramTree encode_program(const ir::Program& p, const transforms::Schedule& s) {
  const ir::Program fused = transforms::fused_structure(p, s);
  const std::vector<transforms::CompTags> tags = transforms::schedule_tags(p, s);
  ProgramTree tree;
  tree.shape = ir::derive_tree(fused);
  tree.leaves.reserve(p.computations.size());
  for (std::size_t k = 0; k < p.computations.size(); ++k)
    tree.leaves.push_back(encode_computation(p, p.computations[k], tags[k]));
  return tree;
}

namespace {

json node_to_json(const ProgramTree& t, int node) {
  json items = json::array();
  for (const ir::LoopTree::Item& item : t.shape.nodes[node].items) {
    if (item.kind == ir::LoopTree::Item::Kind::Computation) {
      const Eigen::VectorXd& leaf = t.leaves[item.index];
      json vec = json::array();
      for (Eigen::Index i = 0; i < leaf.size(); ++i) vec.push_back(leaf[i]);
      items.push_back(json{{"leaf", std::move(vec)}});
    } else {
      items.push_back(json{{"loop", node_to_json(t, item.index)}});
    }
  }
  return json{{"items", std::move(items)}};
}

}  // namespace

json to_json(const ProgramTree& t) {
  return json{{"structure", t.structure()}, {"tree", node_to_json(t, 0)}};
}

}  // namespace tinysched::features
