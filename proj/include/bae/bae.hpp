#pragma once

#include "bae/classical.hpp"
#include "bae/cli.hpp"
#include "bae/config.hpp"
#include "bae/data_product.hpp"
#include "bae/emit.hpp"
#include "bae/errors.hpp"
#include "bae/experiments.hpp"
#include "bae/floquet.hpp"
#include "bae/model.hpp"
#include "bae/parallel.hpp"
