#pragma once

#include "bbis/bridges.hpp"
#include "bbis/config_file.hpp"
#include "bbis/estimator.hpp"
#include "bbis/field.hpp"
#include "bbis/geometry.hpp"
#include "bbis/likelihood.hpp"
#include "bbis/model.hpp"
#include "bbis/nelder_mead.hpp"
#include "bbis/oracle.hpp"
#include "bbis/oracle_check.hpp"
#include "bbis/simulator.hpp"
#include "bbis/studies.hpp"
#include "bbis/svg.hpp"
