def X { u.cred->a.cred; if a.check(cred) then a->u[ok]; a->w[ok]; w.token->u.token; stop else a->u[ko]; a->w[ko]; X }
main { X }
