def pascal_row(n):
    row = [1]
    for _ in range(n):
        nxt = [1]
        for j in range(1, len(row)):
            nxt.append(row[j] + row[j])
        nxt.append(1)
        row = nxt
    return row
