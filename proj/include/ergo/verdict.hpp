#pragma once

#include <initializer_list>

namespace ergo {

enum class Verdict { pass, fail, inconclusive };

inline const char* to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

/// fail dominates inconclusive, which dominates pass.
inline Verdict combine(std::initializer_list<Verdict> parts) noexcept {
  Verdict out = Verdict::pass;
  for (Verdict v : parts) {
    if (v == Verdict::fail) return Verdict::fail;
    if (v == Verdict::inconclusive) out = Verdict::inconclusive;
  }
  return out;
}

inline Verdict combine(Verdict a, Verdict b) noexcept { return combine({a, b}); }

}  // namespace ergo
