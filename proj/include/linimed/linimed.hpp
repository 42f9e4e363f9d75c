#pragma once

#include "linimed/als.hpp"
#include "linimed/arms.hpp"
#include "linimed/config.hpp"
#include "linimed/csv.hpp"
#include "linimed/envs.hpp"
#include "linimed/errors.hpp"
#include "linimed/harness.hpp"
#include "linimed/movielens.hpp"
#include "linimed/plot.hpp"
#include "linimed/policies.hpp"
#include "linimed/ridge.hpp"
#include "linimed/seeding.hpp"
#include "linimed/stats.hpp"
#include "linimed/verify.hpp"
