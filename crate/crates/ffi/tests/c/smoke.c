#include <math.h>
#include <stdio.h>
#include <string.h>

#include "qmcert.h"

int main(void) {
    QmModule *m = NULL;
    QmPoly *a = NULL;
    double upper = 0.0;

    if (qm_module_preset("row_ball:1", &m) != QM_STATUS_OK) return 1;
    if (qm_poly_parse(m, "z", &a) != QM_STATUS_OK) return 2;
    QmSolverOptions opts = qm_solver_options_default();
    if (qm_norm_upper(m, a, 2, QM_NORM_MODE_AUTO, &opts, &upper) != QM_STATUS_OK) return 3;
    if (fabs(upper - 1.0) > 1e-6) return 4;

    QmModule *bad = NULL;
    if (qm_module_preset("nope", &bad) != QM_STATUS_INVALID_INPUT) return 5;
    char *msg = qm_last_error();
    if (msg == NULL || strstr(msg, "nope") == NULL) return 6;
    qm_string_free(msg);

    char *s = qm_poly_to_string(a);
    printf("%s %.6f\n", s, upper);
    qm_string_free(s);
    qm_poly_free(a);
    qm_module_free(m);
    return 0;
}
