#pragma once

// Umbrella header: the full simulation and analysis toolkit.

#include "atmq/aperture.hpp"
#include "atmq/config.hpp"
#include "atmq/crc64.hpp"
#include "atmq/errors.hpp"
#include "atmq/fft.hpp"
#include "atmq/field.hpp"
#include "atmq/grid.hpp"
#include "atmq/math.hpp"
#include "atmq/pdt.hpp"
#include "atmq/propagate.hpp"
#include "atmq/rng.hpp"
#include "atmq/sampling.hpp"
#include "atmq/screens.hpp"
#include "atmq/squeezing.hpp"
#include "atmq/stats.hpp"
#include "atmq/thread_pool.hpp"
#include "atmq/turbulence.hpp"
#include "atmq/version.hpp"
