#include <math.h>
#include <stdio.h>
#include <string.h>

#include "frank_copula.h"

#define CHECK(cond)                                              \
    do {                                                         \
        if (!(cond)) {                                           \
            fprintf(stderr, "failed at line %d: %s\n", __LINE__, #cond); \
            return 1;                                            \
        }                                                        \
    } while (0)

int main(void) {
    double tau = 0.0, rho = 0.0;
    CHECK(fc_rank_correlations(7.930, &tau, &rho) == FC_STATUS_OK);
    CHECK(fabs(tau - 0.60) < 0.005);

    double x[6] = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
    double y[6] = {1.2, 1.9, 3.5, 3.1, 5.8, 5.0};
    FcSample *s = NULL;
    CHECK(fc_sample_new(x, y, 6, FC_TIES_MAX, &s) == FC_STATUS_OK);
    CHECK(fc_sample_len(s) == 6);
    double theta = 0.0, sn = 0.0, tn = 0.0;
    CHECK(fc_gof_statistics(s, &theta, &sn, &tn) == FC_STATUS_OK);
    CHECK(theta > 0.0 && sn >= 0.0 && tn >= 0.0);
    double est = 0.0;
    CHECK(fc_estimate(s, 42, &est) == FC_STATUS_INVALID_ARGUMENT);
    CHECK(strstr(fc_last_error_message(), "estimator") != NULL);
    fc_sample_free(s);

    FcTable *t = NULL;
    CHECK(fc_table_published(&t) == FC_STATUS_OK);
    double crit = 0.0;
    CHECK(fc_table_lookup(t, 23, 3.0, 0.95, FC_STATISTIC_TN, &crit) == FC_STATUS_OK);
    CHECK(crit > 0.0);
    fc_table_free(t);
    printf("ok %s\n", fc_version());
    return 0;
}
