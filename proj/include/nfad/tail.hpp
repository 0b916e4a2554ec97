#pragma once

#include "nfad/flows.hpp"
#include "nfad/rng.hpp"

namespace nfad {

// Surrogate anomalies: latents confined to the low-density spherical shell
// ||z||^2 >= q where q cuts off the chosen tail mass, pushed through the
// trained map into data space.

enum class TailMethod {
  auto_select,  // rejection when the tail mass is large enough, else radial
  rejection,    // draw standard normals, keep those in the shell
  radial,       // normal direction + radius from the truncated norm law
};

// Latent draws conditioned on ||z||^2 >= chi2_tail_quantile(p_tail, d).
// p_tail = 1 reduces to unconditioned standard normals.
Mat sample_tail_latents(int n, int d, double p_tail, Rng& rng,
                        TailMethod method = TailMethod::auto_select);

// Tail latents pushed through the flow's forward map.
Mat gen_surrogates(const FlowStack& flow, int n, double p_tail, Rng& rng,
                   TailMethod method = TailMethod::auto_select);

}  // namespace nfad
