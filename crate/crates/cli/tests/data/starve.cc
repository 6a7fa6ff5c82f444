def X { p.e->q.x; r.f->s.y; X }
main { X }
