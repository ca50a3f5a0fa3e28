#pragma once

#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "matrix_ops.hpp"
#include "system.hpp"
#include "textio.hpp"
#include "transforms.hpp"

namespace riccati {

enum class BuildStrategy { Linear, Doubling };

/// One-step propagation kernel at step delta, evaluated directly from the
/// flow: pi_inv(xi(expm(H delta))).
inline BlockSym2n lambda_init(const LinearSystem& sys, const BasisMatrix& basis,
                              double delta) {
  if (!(delta > 0.0))
    throw RiccatiError("lambda_init: delta must be positive");
  if (basis.dim() != sys.n())
    throw DimensionError("lambda_init: basis dimension does not match the system");
  return pi_inv(xi(expm(hamiltonian(sys) * delta), basis), basis);
}

/// Kernel product realizing time addition: with Z = pinv(Lhat11 + L22),
///   out11 = L11 - L12 Z L12',
///   out12 = -L12 Z Lhat12,
///   out22 = Lhat22 - Lhat12' Z Lhat12.
/// The first argument is the later factor: L_{t+s} = ostar(L_t, L_s).
/// Requires Lhat11 + L22 negative semidefinite.
inline BlockSym2n ostar(const BlockSym2n& l, const BlockSym2n& lhat) {
  if (l.n() != lhat.n())
    throw DimensionError("ostar: operand dimensions differ");
  const SymMat pencil(lhat.b11().mat() + l.b22().mat());
  const auto rep = classify_definiteness(pencil, tol::eps_def);
  if (rep.max_eig > rep.band)
    throw NotInCone("ostar: mixing block has positive eigenvalue " +
                    std::to_string(rep.max_eig));
  const Mat z = pseudo_inverse(pencil, tol::ostar_rank).mat();
  const Mat& l12 = l.b12();
  const Mat& lh12 = lhat.b12();
  const Mat b11 = l.b11().mat() - l12 * z * l12.transpose();
  const Mat b12 = -l12 * z * lh12;
  const Mat b22 = lhat.b22().mat() - lh12.transpose() * z * lh12;
  return BlockSym2n(symmetrize(b11), b12, symmetrize(b22));
}

/// Propagated kernel family Lambda_{k delta}, k = 1..K. basis is carried for
/// solving against the table; sys is retained when the table was built in
/// memory and absent after reload from disk.
struct SemigroupTable {
  double delta = 0.0;
  long long K = 0;
  std::vector<BlockSym2n> entries;
  std::optional<BasisMatrix> basis;
  std::optional<LinearSystem> sys;

  const BlockSym2n& at(long long k) const {
    if (k < 1 || k > K)
      throw RiccatiError("SemigroupTable: index " + std::to_string(k) +
                         " outside 1.." + std::to_string(K));
    return entries[static_cast<std::size_t>(k - 1)];
  }
};

/// Fill the table by repeated kernel products. Linear chains k-1 -> k;
/// Doubling squares power-of-two indices (K must be a power of two) and then
/// fills the remaining indices linearly from the powers already present.
/// reanchor_every = R > 0 recomputes every R-th entry directly from the flow
/// instead of by product; 0 keeps pure product propagation.
inline SemigroupTable build_table(const LinearSystem& sys,
                                  const BasisMatrix& basis, double delta,
                                  long long K,
                                  BuildStrategy strategy = BuildStrategy::Linear,
                                  long long reanchor_every = 0) {
  if (K < 1) throw RiccatiError("build_table: K must be at least 1");
  if (strategy == BuildStrategy::Doubling && (K & (K - 1)) != 0)
    throw RiccatiError("build_table: doubling strategy needs K to be a power of two");

  SemigroupTable table;
  table.delta = delta;
  table.K = K;
  table.basis = basis;
  table.sys = sys;
  table.entries.resize(static_cast<std::size_t>(K));

  const BlockSym2n lam1 = lambda_init(sys, basis, delta);
  table.entries[0] = lam1;

  auto entry = [&table](long long k) -> BlockSym2n& {
    return table.entries[static_cast<std::size_t>(k - 1)];
  };
  auto product_at = [](long long k, const BlockSym2n& a, const BlockSym2n& b) {
    try {
      return ostar(a, b);
    } catch (const NotInCone& e) {
      throw NotInCone("build_table: index " + std::to_string(k) + ": " + e.what());
    }
  };
  auto chain_step = [&](long long k) {
    if (reanchor_every > 0 && k % reanchor_every == 0)
      entry(k) = lambda_init(sys, basis, grid_time(k, delta));
    else
      entry(k) = product_at(k, lam1, entry(k - 1));
  };

  if (strategy == BuildStrategy::Linear) {
    for (long long k = 2; k <= K; ++k) chain_step(k);
  } else {
    for (long long k = 2; k <= K; k *= 2)
      entry(k) = product_at(k, entry(k / 2), entry(k / 2));
    for (long long k = 3; k <= K; ++k)
      if ((k & (k - 1)) != 0) chain_step(k);
  }
  return table;
}

/// Rational kernel power (L_tau)^{p_num/p_den}: the exponent is reduced, the
/// base is re-initialized at step tau/p_den when p_den > 1, and the integer
/// power is taken by repeated squaring (powers of one kernel commute).
inline BlockSym2n ostar_pow(const BlockSym2n& l_tau, long long p_num,
                            long long p_den, const LinearSystem& sys,
                            const BasisMatrix& basis, double tau) {
  if (p_num < 1 || p_den < 1)
    throw RiccatiError("ostar_pow: exponent must be a positive rational");
  if (!(tau > 0.0)) throw RiccatiError("ostar_pow: tau must be positive");
  const long long g = std::gcd(p_num, p_den);
  p_num /= g;
  p_den /= g;

  BlockSym2n sq = (p_den == 1)
                      ? l_tau
                      : lambda_init(sys, basis, tau / static_cast<double>(p_den));
  std::optional<BlockSym2n> acc;
  long long e = p_num;
  while (e > 0) {
    if (e & 1) acc = acc ? ostar(sq, *acc) : sq;
    e >>= 1;
    if (e > 0) sq = ostar(sq, sq);
  }
  return *acc;
}

/// v1 table format: one header line
///   riccati-semigroup v1 n=<n> delta=<delta> K=<K>
/// then per entry a line `k <index> lambda <4n^2 floats row-major>` over the
/// assembled 2n x 2n kernel, and optionally one line `basis <n^2 floats>`.
/// Floats are shortest round-trip decimals, so reload is bit-identical.
inline void write_table(std::ostream& out, const SemigroupTable& table) {
  if (table.entries.empty() || table.K != static_cast<long long>(table.entries.size()))
    throw RiccatiError("write_table: table entries are incomplete");
  const Index n = table.entries[0].n();
  out << "riccati-semigroup v1 n=" << n << " delta=" << format_double(table.delta)
      << " K=" << table.K << "\n";
  for (long long k = 1; k <= table.K; ++k) {
    const Mat full = table.at(k).assemble();
    out << "k " << k << " lambda";
    for (Index i = 0; i < full.rows(); ++i)
      for (Index j = 0; j < full.cols(); ++j)
        out << ' ' << format_double(full(i, j));
    out << "\n";
  }
  if (table.basis) {
    const Mat& m = table.basis->M.mat();
    out << "basis";
    for (Index i = 0; i < m.rows(); ++i)
      for (Index j = 0; j < m.cols(); ++j) out << ' ' << format_double(m(i, j));
    out << "\n";
  }
}

inline void write_table(const std::string& path, const SemigroupTable& table) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_table(out, table);
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

inline SemigroupTable read_table(std::istream& in) {
  std::string line;
  long long line_no = 0;
  auto fail = [&line_no](const std::string& msg) -> ParseError {
    return ParseError("table line " + std::to_string(line_no) + ": " + msg);
  };

  if (!std::getline(in, line)) throw ParseError("table file is empty");
  ++line_no;
  auto head = split_tokens(line);
  if (head.size() != 5 || head[0] != "riccati-semigroup")
    throw fail("expected header 'riccati-semigroup v1 n=<n> delta=<d> K=<K>'");
  if (head[1] != "v1") throw fail("unsupported version '" + std::string(head[1]) + "'");
  auto field = [&fail](std::string_view tok, std::string_view key) {
    if (tok.substr(0, key.size()) != key) throw fail("expected '" + std::string(key) + "...'");
    return tok.substr(key.size());
  };
  const Index n = static_cast<Index>(parse_int(field(head[2], "n=")));
  const double delta = parse_double(field(head[3], "delta="));
  const long long k_total = parse_int(field(head[4], "K="));
  if (n < 1 || k_total < 1 || !(delta > 0.0)) throw fail("invalid header values");

  SemigroupTable table;
  table.delta = delta;
  table.K = k_total;
  table.entries.resize(static_cast<std::size_t>(k_total));

  auto read_floats = [](const std::vector<std::string_view>& toks,
                        std::size_t from, Index rows, Index cols) {
    Mat m(rows, cols);
    std::size_t idx = from;
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) m(i, j) = parse_double(toks[idx++]);
    return m;
  };

  long long next_k = 1;
  bool saw_basis = false;
  while (std::getline(in, line)) {
    ++line_no;
    auto toks = split_tokens(line);
    if (toks.empty()) continue;
    if (toks[0] == "k") {
      if (saw_basis) throw fail("entry line after the basis line");
      if (toks.size() != static_cast<std::size_t>(3 + 4 * n * n) || toks[2] != "lambda")
        throw fail("expected 'k <index> lambda <" + std::to_string(4 * n * n) + " floats>'");
      const long long k = parse_int(toks[1]);
      if (k != next_k)
        throw fail("expected entry index " + std::to_string(next_k) + ", found " +
                   std::to_string(k));
      const Mat full = read_floats(toks, 3, 2 * n, 2 * n);
      table.entries[static_cast<std::size_t>(k - 1)] = BlockSym2n::from_full(full);
      ++next_k;
    } else if (toks[0] == "basis") {
      if (toks.size() != static_cast<std::size_t>(1 + n * n))
        throw fail("expected 'basis <" + std::to_string(n * n) + " floats>'");
      const Mat m = read_floats(toks, 1, n, n);
      SymMat sym(m);
      table.basis = BasisMatrix{sym, symmetrize(inverse(sym.mat())), std::nullopt};
      saw_basis = true;
    } else {
      throw fail("unknown record '" + std::string(toks[0]) + "'");
    }
  }
  if (next_k != k_total + 1)
    throw ParseError("table ended at entry " + std::to_string(next_k - 1) +
                     " of " + std::to_string(k_total));
  return table;
}

inline SemigroupTable read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return read_table(in);
}

}  // namespace riccati
