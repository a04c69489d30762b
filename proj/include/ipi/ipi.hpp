#pragma once

#include "ipi/dataset.hpp"
#include "ipi/digest.hpp"
#include "ipi/errors.hpp"
#include "ipi/fft.hpp"
#include "ipi/grid.hpp"
#include "ipi/metrics.hpp"
#include "ipi/optics.hpp"
#include "ipi/phase_retrieval.hpp"
#include "ipi/png_io.hpp"
#include "ipi/rng.hpp"
#include "ipi/shapes.hpp"
#include "ipi/tomo.hpp"
