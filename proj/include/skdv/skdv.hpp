#pragma once

#include "skdv/grid.hpp"
#include "skdv/model.hpp"
#include "skdv/integrate.hpp"
#include "skdv/conserved.hpp"
#include "skdv/waves.hpp"
#include "skdv/virial.hpp"
#include "skdv/monitor.hpp"
#include "skdv/diagnostics.hpp"
#include "skdv/io.hpp"
#include "skdv/expr.hpp"
#include "skdv/figures.hpp"
#include "skdv/config.hpp"
#include "skdv/run.hpp"
