#include <ostream>

#include "toruslab/cli.hpp"
#include "toruslab/error.hpp"
#include "toruslab/serialize.hpp"

namespace toruslab::cli {

void emit_plotdata(const std::string& kind, const PlotInputs& in, std::ostream& out) {
  if (kind == "err_vs_lambda") {
    out << "m_k,median_err,q10,q90,median_lo,median_hi,n\n";
    for (const auto& p : in.err) {
      out << p.m_k << ',' << fmt17(p.err.median) << ',' << fmt17(p.err.q10) << ','
          << fmt17(p.err.q90) << ',' << fmt17(p.err.median_lo) << ',' << fmt17(p.err.median_hi)
          << ',' << p.err.n << '\n';
    }
  } else if (kind == "density_vs_window") {
    out << "X,density\n";
    if (!in.window) return;
    std::size_t seen = 0, accepted = 0;
    for (const auto& row : in.window->rows) {
      ++seen;
      accepted += row.accepted();
      out << row.m_k << ',' << fmt17(static_cast<double>(accepted) / static_cast<double>(seen)) << '\n';
    }
  } else if (kind == "freq_vs_c0") {
    out << "C0,freq,target,sigma,pass\n";
    for (const auto& e : in.events) {
      if (e.name != "markov") continue;
      out << fmt17(e.C0) << ',' << fmt17(e.freq) << ',' << fmt17(e.target) << ',' << fmt17(e.sigma)
          << ',' << int(e.pass) << '\n';
    }
  } else {
    fail(ErrorKind::Validation, "unknown plot kind '" + kind + "'");
  }
}

}  // namespace toruslab::cli
