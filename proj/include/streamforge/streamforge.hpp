#ifndef STREAMFORGE_STREAMFORGE_HPP
#define STREAMFORGE_STREAMFORGE_HPP

#include "bessel.hpp"
#include "distributions.hpp"
#include "error.hpp"
#include "exec_grid.hpp"
#include "fisher.hpp"
#include "grf.hpp"
#include "rng.hpp"
#include "stream_io.hpp"

#endif // STREAMFORGE_STREAMFORGE_HPP
