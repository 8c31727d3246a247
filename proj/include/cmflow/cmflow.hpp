#pragma once

#include "cmflow/anisotropy.hpp"
#include "cmflow/calculus.hpp"
#include "cmflow/config.hpp"
#include "cmflow/errors.hpp"
#include "cmflow/flow.hpp"
#include "cmflow/geometry.hpp"
#include "cmflow/grid.hpp"
#include "cmflow/initial_data.hpp"
#include "cmflow/interpolation.hpp"
#include "cmflow/io.hpp"
#include "cmflow/params.hpp"
#include "cmflow/quadrature.hpp"
#include "cmflow/setup.hpp"
#include "cmflow/sigma.hpp"
#include "cmflow/spectral.hpp"
