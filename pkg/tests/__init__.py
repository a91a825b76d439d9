# TRR Backend Tests
