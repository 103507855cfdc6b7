def merge(a, b):
    i = 0
    j = 0
    out = []
    while i < len(a) and j < len(b):
        if a[i] <= b[j]:
            out.append(a[i])
            i += 1
        else:
            out.append(b[j])
            i += 1
    out.extend(a[i:])
    out.extend(b[j:])
    return out
