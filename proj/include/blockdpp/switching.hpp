#pragma once

#include <array>
#include <utility>

#include <json.hpp>

#include "blockdpp/symbol.hpp"

namespace bdpp {

RVec sigma(const RVec& v, int k = 1);  // sigma(a) = (a1, ..., a_{p-1}, a0)
RVec recip(const RVec& v);
RVec hadamard(const RVec& u, const RVec& v);

// eta(a, b) = (b', a') with M(a)M(b) = M(b')M(a').
std::pair<RVec, RVec> eta_map(const RVec& a, const RVec& b);
std::vector<double> eta_k(const RVec& a, const RVec& b);
// Curl version: N(a)N(b) = N(b'')N(a'') with (a'', b'') = eta(b, a).
std::pair<RVec, RVec> eta_curl_map(const RVec& a, const RVec& b);
// theta(a, b) = (b', a') with M(a)N(b) = N(b')M(a').
std::pair<RVec, RVec> theta_map(const RVec& a, const RVec& b);
// Given N(e)M(f), returns (a, b) with M(a)N(b) = N(e)M(f).
std::pair<RVec, RVec> theta_inverse(const RVec& e, const RVec& f);

// The three 2x2 rules, verbatim.
enum class P2Rule { MixedDownUp, UpUp, DownDown };
struct P2Factors {
  // left = (l0 l1 ; l2 l3), right = (r0 r1 ; r2 r3) with the z placement fixed by the rule
  std::array<double, 4> left{};
  std::array<double, 4> right{};
};
struct P2Switch {
  P2Factors out;
  double x = 1.0;
};
P2Switch p2_switch(P2Rule rule, const P2Factors& in);
CMat p2_eval_left(P2Rule rule, const P2Factors& f, cplx z, bool switched);
CMat p2_eval_right(P2Rule rule, const P2Factors& f, cplx z, bool switched);

enum class DualSide { Left, Right };
// Rewrites a down factor through its up-form and a shift power.
SymbolExpr dualize(const ElementaryFactor& f, DualSide side);

struct SwitchResult {
  ElementaryFactor left;   // same kind as the original right factor
  ElementaryFactor right;  // same kind as the original left factor
  RVec aux;
};

SwitchResult switch_pair(const ElementaryFactor& left, const ElementaryFactor& right);

nlohmann::json to_json(const SwitchResult& r);

}  // namespace bdpp
