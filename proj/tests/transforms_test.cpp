#include <doctest.h>

#include <nlohmann/json.hpp>

#include "tinysched/ir.hpp"
#include "tinysched/transforms.hpp"

using namespace tinysched;
using transforms::Action;
using transforms::Schedule;

namespace {

// C[i,j] = A[i,j] + B[i,j]
ir::Program matrix_add(std::int64_t rows = 64, std::int64_t cols = 64) {
  ir::Program p;
  p.buffers.push_back({0, ir::BufferKind::Input, {rows, cols}});
  p.buffers.push_back({1, ir::BufferKind::Input, {rows, cols}});
  p.buffers.push_back({2, ir::BufferKind::Output, {rows, cols}});
  const auto i = ir::AffineExpr::iterator("i");
  const auto j = ir::AffineExpr::iterator("j");
  ir::Computation c;
  c.id = 0;
  c.loops = {{"i", 0, rows, false, false}, {"j", 0, cols, false, false}};
  c.lhs = ir::access_matrix_of({i, j}, {"i", "j"}, 2);
  c.rhs = ir::Expr::binary(ir::OpKind::Add,
                           ir::Expr::load(ir::access_matrix_of({i, j}, {"i", "j"}, 0)),
                           ir::Expr::load(ir::access_matrix_of({i, j}, {"i", "j"}, 1)));
  p.computations.push_back(c);
  return p;
}

// s[i] += A[i,k] over k (k marked as the reduction dimension)
ir::Program row_sum(std::int64_t rows = 32, std::int64_t cols = 12) {
  ir::Program p;
  p.buffers.push_back({0, ir::BufferKind::Input, {rows, cols}});
  p.buffers.push_back({1, ir::BufferKind::Output, {rows}});
  const auto i = ir::AffineExpr::iterator("i");
  const auto k = ir::AffineExpr::iterator("k");
  ir::Computation c;
  c.id = 0;
  c.loops = {{"i", 0, rows, false, false}, {"k", 0, cols, true, false}};
  c.lhs = ir::access_matrix_of({i}, {"i", "k"}, 1);
  c.rhs = ir::Expr::load(ir::access_matrix_of({i, k}, {"i", "k"}, 0));
  c.reduce = ir::ReduceOp::Sum;
  p.computations.push_back(c);
  return p;
}

}  // namespace

TEST_CASE("tiling is rejected when the extent is below the tile size") {
  const ir::Program p = matrix_add(16, 16);
  CHECK_FALSE(transforms::is_legal(p, {}, Action{transforms::Tiling{0, 0, 1, 32, 32}}));
  CHECK(transforms::is_legal(p, {}, Action{transforms::Tiling{0, 0, 1, 16, 8}}));
}

TEST_CASE("tiling requires the tile size to divide the extent") {
  const ir::Program p = matrix_add(96, 96);
  CHECK(transforms::is_legal(p, {}, Action{transforms::Tiling{0, 0, 1, 32, 16}}));
  CHECK_FALSE(transforms::is_legal(p, {}, Action{transforms::Tiling{0, 0, 1, 64, 16}}));
}

TEST_CASE("unrolling legality follows divisibility of the innermost extent") {
  const ir::Program p = row_sum(32, 12);
  CHECK(transforms::is_legal(p, {}, Action{transforms::Unrolling{0, 4}}));
  CHECK_FALSE(transforms::is_legal(p, {}, Action{transforms::Unrolling{0, 8}}));
}

TEST_CASE("parallelizing a reduction dimension is illegal") {
  const ir::Program p = row_sum();
  CHECK_FALSE(transforms::is_legal(p, {}, Action{transforms::Parallelize{0, 1}}));
  CHECK(transforms::is_legal(p, {}, Action{transforms::Parallelize{0, 0}}));
}

TEST_CASE("tiling rewrites loops and accesses") {
  const ir::Program p = matrix_add(64, 64);
  const ir::Program q =
      transforms::apply(p, Schedule{{Action{transforms::Tiling{0, 0, 1, 16, 16}}}});
  const ir::Computation& c = q.computations[0];
  REQUIRE(c.depth() == 4);
  CHECK(c.loops[0].extent() == 4);
  CHECK(c.loops[1].extent() == 4);
  CHECK(c.loops[2].extent() == 16);
  CHECK(c.loops[3].extent() == 16);
  // i = 16*i_outer + i_inner shows up in every access row for dimension 0.
  Eigen::MatrixXi want(2, 5);
  want << 16, 0, 1, 0, 0, 0, 16, 0, 1, 0;
  CHECK(c.lhs.coeffs == want);
  CHECK(ir::validate(q).empty());
}

TEST_CASE("the empty schedule is the identity") {
  const ir::Program p = matrix_add();
  const ir::Program q = transforms::apply(p, {});
  CHECK(ir::to_json(p) == ir::to_json(q));
}

TEST_CASE("interchange applied twice restores the loop order") {
  const ir::Program p = matrix_add();
  const Schedule twice{{Action{transforms::Interchange{0, 0, 1}},
                        Action{transforms::Interchange{0, 0, 1}}}};
  const ir::Program q = transforms::apply(p, twice);
  CHECK(ir::to_json(p) == ir::to_json(q));

  const ir::Program once =
      transforms::apply(p, Schedule{{Action{transforms::Interchange{0, 0, 1}}}});
  CHECK(once.computations[0].loops[0].iterator == "j");
  CHECK(ir::validate(once).empty());
}

TEST_CASE("apply never mutates its input") {
  const ir::Program p = matrix_add();
  const auto before = ir::to_json(p);
  (void)transforms::apply(p, Schedule{{Action{transforms::Tiling{0, 0, 1, 8, 8}}}});
  CHECK(ir::to_json(p) == before);
}

TEST_CASE("unrolling replicates the body and divides the extent") {
  const ir::Program p = row_sum(32, 12);
  const ir::Program q = transforms::apply(p, Schedule{{Action{transforms::Unrolling{0, 4}}}});
  REQUIRE(q.computations.size() == 4);
  for (const ir::Computation& c : q.computations) {
    CHECK(c.loops[1].extent() == 3);
    CHECK(c.loops[1].iterator == "k");
  }
  // Replica r reads A[i, 4k + r].
  for (int r = 0; r < 4; ++r) {
    const ir::AccessMatrix* read = ir::loads_of(q.computations[r].rhs)[0];
    CHECK(read->coeffs(1, 1) == 4);
    CHECK(read->coeffs(1, 2) == r);
  }
  CHECK(ir::validate(q).empty());
}

TEST_CASE("heuristic parallelization picks the outermost legal level") {
  SUBCASE("plain matrix add parallelizes level 0") {
    const Schedule s = transforms::heuristic_parallelize(matrix_add(1024, 16));
    REQUIRE(s.actions.size() == 1);
    const auto* z = std::get_if<transforms::Parallelize>(&s.actions[0]);
    REQUIRE(z != nullptr);
    CHECK(z->level == 0);
  }
  SUBCASE("reduction-first nests fall through to the next level") {
    // s[i] += A[k,i] with the reduction loop outermost.
    ir::Program p;
    p.buffers.push_back({0, ir::BufferKind::Input, {32, 32}});
    p.buffers.push_back({1, ir::BufferKind::Output, {32}});
    const auto k = ir::AffineExpr::iterator("k");
    const auto i = ir::AffineExpr::iterator("i");
    ir::Computation c;
    c.id = 0;
    c.loops = {{"k", 0, 32, true, false}, {"i", 0, 32, false, false}};
    c.lhs = ir::access_matrix_of({i}, {"k", "i"}, 1);
    c.rhs = ir::Expr::load(ir::access_matrix_of({k, i}, {"k", "i"}, 0));
    c.reduce = ir::ReduceOp::Sum;
    p.computations.push_back(c);
    REQUIRE(ir::validate(p).empty());

    const Schedule s = transforms::heuristic_parallelize(p);
    REQUIRE(s.actions.size() == 1);
    const auto* z = std::get_if<transforms::Parallelize>(&s.actions[0]);
    CHECK(z->level == 1);
  }
  SUBCASE("small outer extents yield no action") {
    CHECK(transforms::heuristic_parallelize(matrix_add(4, 1024)).empty());
  }
}

TEST_CASE("schedule tags mirror the actions") {
  const ir::Program p = matrix_add();
  Schedule s;
  s.actions.push_back(Action{transforms::Interchange{0, 0, 1}});
  s.actions.push_back(Action{transforms::Tiling{0, 0, 1, 16, 8}});
  s.actions.push_back(Action{transforms::Unrolling{0, 2}});
  REQUIRE(transforms::is_legal(p, s));

  const auto tags = transforms::schedule_tags(p, s);
  REQUIRE(tags.size() == 1);
  CHECK(tags[0].levels[0].interchange);
  CHECK(tags[0].levels[1].interchange);
  CHECK(tags[0].levels[0].tiling);
  CHECK(tags[0].levels[0].tile_factor == 16);
  CHECK(tags[0].levels[1].tile_factor == 8);
  CHECK(tags[0].unrolled);
  CHECK(tags[0].unroll_factor == 2);
  CHECK(tags[0].parallel_level == -1);
  CHECK_FALSE(tags[0].levels[2].tiling);
}

TEST_CASE("schedule JSON round-trips") {
  Schedule s;
  s.actions.push_back(Action{transforms::Fusion{0, 1, 1}});
  s.actions.push_back(Action{transforms::Tiling{1, 0, 1, 32, 8}});
  s.actions.push_back(Action{transforms::Unrolling{0, 16}});
  s.actions.push_back(Action{transforms::Parallelize{0, 0}});
  const Schedule t = transforms::schedule_from_json(transforms::to_json(s));
  CHECK(s == t);
}

TEST_CASE("stage order is enforced") {
  const ir::Program p = matrix_add();
  Schedule tiled{{Action{transforms::Tiling{0, 0, 1, 8, 8}}}};
  CHECK_FALSE(transforms::is_legal(p, tiled, Action{transforms::Interchange{0, 0, 1}}));
  CHECK_THROWS_AS((void)transforms::apply(p, Schedule{{Action{transforms::Tiling{0, 0, 1, 8, 8}},
                                                       Action{transforms::Interchange{0, 0, 1}}}}),
                  transforms::IllegalSchedule);
}

TEST_CASE("tiling above the depth cap is rejected") {
  ir::Program p;
  p.buffers.push_back({0, ir::BufferKind::Input, {16, 16, 4, 4, 4}});
  p.buffers.push_back({1, ir::BufferKind::Output, {16, 16, 16, 4, 4}});
  std::vector<std::string> names;
  ir::Computation c;
  c.id = 0;
  for (int d = 0; d < 6; ++d) {
    names.push_back("i" + std::to_string(d));
    c.loops.push_back({names.back(), 0, d < 3 ? 16 : 4, d == 5, false});
  }
  std::vector<ir::AffineExpr> idx;
  for (int d = 0; d < 6; ++d) idx.push_back(ir::AffineExpr::iterator(names[d]));
  c.lhs = ir::access_matrix_of({idx[0], idx[1], idx[2], idx[3], idx[4]}, names, 1);
  c.rhs = ir::Expr::load(
      ir::access_matrix_of({idx[1], idx[2], idx[3], idx[4], idx[5]}, names, 0));
  c.reduce = ir::ReduceOp::Sum;
  p.computations.push_back(c);
  REQUIRE(ir::validate(p).empty());

  // 6 + 2 loops would exceed the depth-7 representation cap.
  CHECK_FALSE(transforms::is_legal(p, {}, Action{transforms::Tiling{0, 0, 1, 8, 8}}));
}
