#include <stdio.h>
#include "shotlearn.h"
int main(void) {
    SlState *s = NULL;
    double v = 0;
    int rc = sl_state_sample(-1, 4, 7, 0, &s);
    rc |= sl_state_reduced_purity(s, 0, &v);
    sl_state_free(s);
    printf("purity %.6f rc %d\n", v, rc);
    if (sl_state_overlap(NULL, NULL, &v) != SL_NULL_POINTER) return 9;
    printf("err: %s\n", sl_last_error_message());
    return rc;
}
