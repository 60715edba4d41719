#pragma once

#include "bgkit/certificate.hpp"
#include "bgkit/common.hpp"
#include "bgkit/config.hpp"
#include "bgkit/functionals.hpp"
#include "bgkit/grid.hpp"
#include "bgkit/io.hpp"
#include "bgkit/model.hpp"
#include "bgkit/particles.hpp"
#include "bgkit/pde.hpp"
#include "bgkit/rng.hpp"
#include "bgkit/verify.hpp"
