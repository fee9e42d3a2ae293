#pragma once

#include <bahc/bahc_filter.hpp>
#include <bahc/baselines.hpp>
#include <bahc/error.hpp>
#include <bahc/harness.hpp>
#include <bahc/hierclust.hpp>
#include <bahc/io.hpp>
#include <bahc/matrix_core.hpp>
#include <bahc/parallel.hpp>
#include <bahc/portfolio.hpp>
#include <bahc/rng.hpp>
#include <bahc/spectral_diag.hpp>
